"""Tests for checksums.py"""
import hashlib

import pytest

from checksums import MANIFEST_NAME, ChecksumManifest, verify_runs


@pytest.fixture
def run_dir(tmp_path):
    """A small run directory with a nested file."""
    run = tmp_path / "run_a"
    (run / "profiles").mkdir(parents=True)
    (run / "report.json").write_text('{"format_version": 1}\n')
    (run / "profiles" / "rates.csv").write_text("k,rate\n1,1.47\n")
    return run


def copy_run(src, dst):
    for path in src.rglob('*'):
        target = dst / path.relative_to(src)
        if path.is_dir():
            target.mkdir(parents=True, exist_ok=True)
        else:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(path.read_bytes())
    return dst


class TestComputeSha256:
    """Test suite for file hashing."""

    def test_known_hash(self, tmp_path):
        """Test against hashlib on the same bytes."""
        path = tmp_path / "f.txt"
        path.write_bytes(b"threshold")
        assert ChecksumManifest.compute_sha256(path) == hashlib.sha256(b"threshold").hexdigest()


class TestManifest:
    """Test suite for SHA256SUMS manifests."""

    def test_write_lists_files_sorted(self, run_dir):
        """Test one line per file, POSIX paths, sorted, manifest excluded."""
        manifest = ChecksumManifest.write(run_dir)
        lines = manifest.read_text().splitlines()
        names = [line.split("  ", 1)[1] for line in lines]
        assert names == ["profiles/rates.csv", "report.json"]
        assert MANIFEST_NAME not in names

    def test_parse(self):
        """Test both text and binary-mode lines parse; junk lines are skipped."""
        h = "a" * 64
        content = f"# comment\n{h}  report.json\n{h.upper()} *data.csv\nnot a hash\n"
        assert ChecksumManifest.parse(content) == {'report.json': h, 'data.csv': h}

    def test_verify_clean(self, run_dir):
        """Test an untouched run verifies."""
        ChecksumManifest.write(run_dir)
        assert ChecksumManifest.verify(run_dir) == (True, [])

    def test_verify_detects_change(self, run_dir):
        """Test a modified and an added file are both reported."""
        ChecksumManifest.write(run_dir)
        (run_dir / "report.json").write_text('{"format_version": 2}\n')
        (run_dir / "extra.csv").write_text("x\n")
        ok, problems = ChecksumManifest.verify(run_dir)
        assert not ok
        assert any(p.startswith("report.json") for p in problems)
        assert any(p.startswith("extra.csv: only in disk") for p in problems)

    def test_missing_manifest(self, run_dir):
        """Test reading a run without manifest raises."""
        with pytest.raises(FileNotFoundError):
            ChecksumManifest.read(run_dir)


class TestCompare:
    """Test suite for comparing two runs."""

    def test_identical_runs(self, run_dir, tmp_path):
        """Test byte-identical runs compare equal."""
        other = copy_run(run_dir, tmp_path / "run_b")
        ChecksumManifest.write(run_dir)
        ChecksumManifest.write(other)
        assert ChecksumManifest.compare(run_dir, other) == (True, [])
        assert verify_runs(run_dir, other, verbose=False)

    def test_different_runs(self, run_dir, tmp_path, capsys):
        """Test a changed value is reported by file name."""
        other = copy_run(run_dir, tmp_path / "run_b")
        (other / "profiles" / "rates.csv").write_text("k,rate\n1,1.48\n")
        ChecksumManifest.write(run_dir)
        ChecksumManifest.write(other)
        identical, problems = ChecksumManifest.compare(run_dir, other)
        assert not identical
        assert len(problems) == 1 and problems[0].startswith("profiles/rates.csv")
        assert not verify_runs(run_dir, other)
        assert "✗ 1 difference(s)" in capsys.readouterr().out
