"""Test fixtures and configuration for pytest."""
import json

import pytest
from unittest.mock import patch

from linearized_operator import assemble_L, ground_eigenpair
from profiles import build_profiles
from radial_grid import make_grid


@pytest.fixture(scope="session")
def reference_grid():
    """The d = 6 reference grid (R = 60, N = 6000)."""
    return make_grid(6, 60.0, 6000)


@pytest.fixture(scope="session")
def tail_grid():
    """Wide d = 6 grid for scaling checks that need the far field."""
    return make_grid(6, 120.0, 6000)


@pytest.fixture(scope="session")
def op6():
    """Linearized operator on a desk-size d = 6 grid."""
    return assemble_L(make_grid(6, 40.0, 1600))


@pytest.fixture(scope="session")
def eig6(op6):
    """Negative eigenpair of op6."""
    return ground_eigenpair(op6)


@pytest.fixture(scope="session")
def op7():
    """Linearized operator on a desk-size d = 7 grid."""
    return assemble_L(make_grid(7, 40.0, 1600))


@pytest.fixture(scope="session")
def eig7(op7):
    """Negative eigenpair of op7."""
    return ground_eigenpair(op7)


@pytest.fixture(scope="session")
def profiles6(op6, eig6):
    """W_3^a profiles with a = 1 in d = 6."""
    return build_profiles(1.0, 3, eig6, op6)


@pytest.fixture(scope="session")
def wide6():
    """Operator on a d = 6 grid wide enough for W_k^a profiles and their short evolutions."""
    return assemble_L(make_grid(6, 60.0, 1200))


@pytest.fixture(scope="session")
def wide_eig6(wide6):
    """Negative eigenpair of wide6."""
    return ground_eigenpair(wide6)


@pytest.fixture(scope="session")
def cone6():
    """Operator on a d = 6 grid holding W_k^a(t_check + 1/e0) data for T_run = 25."""
    return assemble_L(make_grid(6, 70.0, 1400))


@pytest.fixture(scope="session")
def cone_eig6(cone6):
    """Negative eigenpair of cone6."""
    return ground_eigenpair(cone6)


@pytest.fixture
def temp_config_dir(tmp_path):
    """Create a temporary config directory."""
    config_dir = tmp_path / ".config" / "thresholdlab"
    config_dir.mkdir(parents=True)
    return config_dir


@pytest.fixture
def temp_config_file(temp_config_dir):
    """Create a temporary config file with small grids."""
    config_file = temp_config_dir / "config.json"
    sample_config = {
        "d": 6,
        "R": 40.0,
        "N": 800,
        "a_list": [1.0, -1.0],
        "k_list": [1, 2],
        "seed": 7,
        "suites": {
            "dichotomy": {"R": 80.0, "N": 1600, "T_run": 25.0}
        }
    }
    config_file.write_text(json.dumps(sample_config, indent=2))
    return config_file


@pytest.fixture
def mock_config_manager(temp_config_file):
    """ConfigManager reading the temporary config file."""
    with patch('config_manager.CONFIG_FILE', temp_config_file):
        from config_manager import ConfigManager
        yield ConfigManager()
