from fdnls.check_rules import main, preset_problems
from fdnls.load import load_presets


def test_shipped_data_is_consistent(capsys):
    assert main() == 0
    assert "Experiments without rules: []" in capsys.readouterr().out


def test_broken_preset_is_reported():
    presets = dict(load_presets())
    assert preset_problems(presets) == []
    assert preset_problems({"missing": {}}) == ["preset missing: unknown preset 'missing'"]
