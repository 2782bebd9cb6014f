import json
import os
import tempfile
import unittest

from scripts.config import KINDS, ExperimentConfig, load_config
from utils.errors import ConfigInvalid
from utils.helper import config_hash

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'configs')

PCF = {
    'kind': 'pcf',
    'matrix': {'poly': [1, 1, 0, -1]},
    'roof': {'terms': [{'k': [0, 0, 0], 're': 1.0}]},
    'params': {'count': 2},
    'seed': 7,
}


class TestExperimentConfig(unittest.TestCase):

    def test_defaults_filled_in(self):
        config = ExperimentConfig.from_dict(PCF)
        self.assertEqual(config.params['count'], 2)
        self.assertEqual(config.params['radius'], 0.05)
        self.assertEqual(config.out_dir, 'results')
        self.assertEqual(config.workers, 1)

    def test_unknown_keys_rejected(self):
        with self.assertRaises(ConfigInvalid):
            ExperimentConfig.from_dict(dict(PCF, colour='blue'))
        with self.assertRaises(ConfigInvalid):
            ExperimentConfig.from_dict(dict(PCF, params={'budget': 3}))
        with self.assertRaises(ConfigInvalid):
            ExperimentConfig.from_dict(dict(PCF, roof={'terms': [{'k': [0, 0, 0], 're': 1.0, 'scale': 2}]}))

    def test_bad_values_rejected(self):
        bad = [
            dict(PCF, kind='spectrum'),
            dict(PCF, seed=-1),
            dict(PCF, seed=2 ** 64),
            dict(PCF, workers=0),
            dict(PCF, matrix={'rows': [[1, 1], [1, 1]]}),
            dict(PCF, matrix={'poly': [1, 1.5, 0, -1]}),
            dict(PCF, roof={'terms': [{'k': [0, 0, 0], 're': -1.0}]}),
            dict(PCF, roof={'terms': []}),
            dict(PCF, translation=['1/2']),
            {'kind': 'pcf', 'params': {}},
        ]
        for data in bad:
            with self.assertRaises(ConfigInvalid):
                ExperimentConfig.from_dict(data)

    def test_round_trip(self):
        config = ExperimentConfig.from_dict(dict(PCF, translation=['1/2', '0', '0.25']))
        self.assertEqual(config.translation, ('1/2', '0', '1/4'))
        again = ExperimentConfig.from_dict(config.to_dict())
        self.assertEqual(again.to_dict(), config.to_dict())
        self.assertEqual(again.hash, config.hash)

    def test_hash_ignores_out_dir_and_workers(self):
        config = ExperimentConfig.from_dict(PCF)
        moved = config.with_overrides(out_dir='elsewhere', workers=4)
        self.assertEqual(moved.out_dir, 'elsewhere')
        self.assertEqual(moved.hash, config.hash)
        self.assertNotEqual(config.with_overrides(seed=8).hash, config.hash)

    def test_bundled_configs_load(self):
        kinds = set()
        for name in sorted(os.listdir(CONFIG_DIR)):
            config = load_config(os.path.join(CONFIG_DIR, name))
            kinds.add(config.kind)
        self.assertEqual(kinds, set(KINDS))

    def test_unreadable_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'broken.json')
            with open(path, 'w', encoding='utf-8') as f:
                f.write('{"kind": ')
            with self.assertRaises(ConfigInvalid):
                load_config(path)
            with self.assertRaises(ConfigInvalid):
                load_config(os.path.join(tmp, 'missing.json'))


class TestConfigHash(unittest.TestCase):

    def test_key_order_does_not_matter(self):
        self.assertEqual(config_hash({'a': 1, 'b': [1, 2]}), config_hash(json.loads('{"b": [1, 2], "a": 1}')))
        self.assertNotEqual(config_hash({'a': 1}), config_hash({'a': 2}))


if __name__ == '__main__':
    unittest.main()
