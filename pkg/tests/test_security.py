import pytest

from utils.security import artifact_path, sanitize_path


class TestSanitizePath:
    def test_allows_inside(self, tmp_path):
        base = tmp_path / 'base'
        base.mkdir()
        safe = sanitize_path(str(base), 'dmrg/ground_state.json')
        assert safe and safe.startswith(str(base.resolve()))

    def test_blocks_escape(self, tmp_path):
        base = tmp_path / 'base'
        base.mkdir()
        assert sanitize_path(str(base), '../escape') is None
        assert sanitize_path(str(base), 'a/../../escape') is None

    def test_absolute_candidates(self, tmp_path):
        base = tmp_path / 'base'
        base.mkdir()
        assert sanitize_path(str(base), str(base / 'inside.csv')) is not None
        assert sanitize_path(str(base), str(tmp_path / 'outside.csv')) is None


class TestArtifactPath:
    def test_returns_path(self, tmp_path):
        path = artifact_path(str(tmp_path), 'measure/zne.csv')
        assert path.name == 'zne.csv'
        assert path.parent.name == 'measure'

    def test_raises_on_escape(self, tmp_path):
        with pytest.raises(ValueError):
            artifact_path(str(tmp_path), '../manifest.json')
