"""Experiment config parsing: strict keys, derived sizes, round trips."""

import pytest

from dnclab import config as cfgmod
from dnclab.core import DncVariant
from dnclab.errors import ConfigError
from dnclab.tasks import TaskKind


def minimal(**over):
    d = {"task": "add", "variant": "REG"}
    d.update(over)
    return d


class TestParse:
    def test_defaults_fill_in(self):
        exp = cfgmod.parse_experiment(minimal())
        assert exp.task is TaskKind.ADD
        assert exp.variant is DncVariant.REG
        assert exp.dnc.input_size == 3 and exp.dnc.output_size == 3
        assert exp.dnc.memory.num_slots == 50
        assert exp.train.batch_size == 64
        assert exp.train.iterations == 300_000

    def test_controller_input_derived(self):
        exp = cfgmod.parse_experiment(
            minimal(memory={"num_slots": 10, "slot_width": 8, "num_read_heads": 2})
        )
        assert exp.dnc.controller.input_size == 3 + 16

    def test_unknown_top_key(self):
        with pytest.raises(ConfigError, match="mystery"):
            cfgmod.parse_experiment(minimal(mystery=1))

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError, match="oops"):
            cfgmod.parse_experiment(minimal(train={"oops": 3}))

    def test_unknown_task_and_variant(self):
        with pytest.raises(ConfigError):
            cfgmod.parse_experiment(minimal(task="juggle"))
        with pytest.raises(ConfigError):
            cfgmod.parse_experiment(minimal(variant="MAGIC"))

    def test_missing_required(self):
        with pytest.raises(ConfigError):
            cfgmod.parse_experiment({"task": "add"})

    def test_invalid_values_propagate(self):
        with pytest.raises(ConfigError):
            cfgmod.parse_experiment(minimal(reg={"alpha": 2.0}))


class TestRoundtrip:
    def test_save_load(self, tmp_path):
        exp = cfgmod.parse_experiment(
            minimal(
                memory={"num_slots": 12, "slot_width": 6, "num_read_heads": 3},
                hidden_size=32,
                train={"iterations": 100, "seed": 4},
            )
        )
        path = tmp_path / "exp.json"
        cfgmod.save_experiment(exp, path)
        again = cfgmod.load_experiment(path)
        assert again == exp

    def test_load_rejects_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            cfgmod.load_experiment(path)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            cfgmod.load_experiment(tmp_path / "absent.json")
