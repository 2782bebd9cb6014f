import json
import os
import tempfile
import unittest
from unittest.mock import patch

import pandas as pd

from scripts.anosovlab import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main
from scripts.config import ExperimentConfig
from scripts.experiments import RUNNERS, run_experiment
from utils.errors import ExperimentFailed, NotBunched
from utils.helper import file_sha256

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'configs')
CATALOG = os.path.join(CONFIG_DIR, 'catalog.json')


class TestMain(unittest.TestCase):

    @patch('scripts.anosovlab.run_experiment')
    def test_success(self, mock_run):
        mock_run.return_value = ['out/catalog.csv', 'out/manifest.json']
        self.assertEqual(main(['catalog', '--config', CATALOG, '--out', 'out', '--seed', '5']), EXIT_OK)
        config = mock_run.call_args[0][0]
        self.assertEqual(config.out_dir, 'out')
        self.assertEqual(config.seed, 5)

    @patch('scripts.anosovlab.run_experiment')
    def test_experiment_failure(self, mock_run):
        mock_run.side_effect = ExperimentFailed('boom')
        self.assertEqual(main(['catalog', '--config', CATALOG]), EXIT_FAILED)

    @patch('scripts.anosovlab.run_experiment')
    def test_invalid_config(self, mock_run):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'bad.json')
            with open(path, 'w', encoding='utf-8') as f:
                json.dump({'kind': 'catalog', 'params': {'d': 3, 'depth': 2}}, f)
            self.assertEqual(main(['catalog', '--config', path]), EXIT_CONFIG)
        mock_run.assert_not_called()

    @patch('scripts.anosovlab.run_experiment')
    def test_subcommand_must_match_config(self, mock_run):
        self.assertEqual(main(['pcf', '--config', CATALOG]), EXIT_CONFIG)
        mock_run.assert_not_called()

    @patch('scripts.anosovlab.run_experiment')
    def test_bad_seed_override(self, mock_run):
        self.assertEqual(main(['catalog', '--config', CATALOG, '--seed', '-3']), EXIT_CONFIG)
        mock_run.assert_not_called()

    def test_unknown_subcommand(self):
        with self.assertRaises(SystemExit):
            main(['spectrum', '--config', CATALOG])


class TestRunExperiment(unittest.TestCase):

    def _config(self, data: dict, out_dir: str) -> ExperimentConfig:
        return ExperimentConfig.from_dict(dict(data, out_dir=out_dir))

    def test_catalog_reports_are_reproducible(self):
        with open(CATALOG, 'r', encoding='utf-8') as f:
            data = json.load(f)
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            files = run_experiment(self._config(data, first))
            run_experiment(self._config(data, second))
            self.assertEqual([os.path.basename(p) for p in files], ['catalog.csv', 'manifest.json'])

            frame = pd.read_csv(os.path.join(first, 'catalog.csv'))
            row = frame[frame['poly_coeffs'] == '1 1 0 -1']
            self.assertTrue(bool(row['satisfied'].iloc[0]))

            with open(os.path.join(first, 'manifest.json'), 'r', encoding='utf-8') as f:
                manifest = json.load(f)
            self.assertEqual(manifest['files']['catalog.csv'], file_sha256(os.path.join(first, 'catalog.csv')))
            self.assertEqual(manifest['seed'], 0)
            with open(os.path.join(first, 'runs.jsonl'), 'r', encoding='utf-8') as f:
                runs = [json.loads(line) for line in f]
            self.assertEqual(len(runs), 1)
            self.assertEqual(runs[0]['config_hash'], manifest['config_hash'])
            for name in ('catalog.csv', 'manifest.json'):
                with open(os.path.join(first, name), 'rb') as a, open(os.path.join(second, name), 'rb') as b:
                    self.assertEqual(a.read(), b.read())

    def test_catalog_independent_of_workers(self):
        with open(CATALOG, 'r', encoding='utf-8') as f:
            data = json.load(f)
        with tempfile.TemporaryDirectory() as serial, tempfile.TemporaryDirectory() as parallel:
            run_experiment(self._config(data, serial))
            run_experiment(self._config(dict(data, workers=2), parallel))
            self.assertEqual(file_sha256(os.path.join(serial, 'catalog.csv')),
                             file_sha256(os.path.join(parallel, 'catalog.csv')))

    def test_every_bundled_config_independent_of_workers(self):
        for name in sorted(os.listdir(CONFIG_DIR)):
            with open(os.path.join(CONFIG_DIR, name), 'r', encoding='utf-8') as f:
                data = json.load(f)
            with tempfile.TemporaryDirectory() as serial, tempfile.TemporaryDirectory() as parallel:
                files = run_experiment(self._config(data, serial))
                run_experiment(self._config(dict(data, workers=3), parallel))
                for path in files + [os.path.join(serial, 'runs.jsonl')]:
                    other = os.path.join(parallel, os.path.basename(path))
                    self.assertEqual(file_sha256(path), file_sha256(other), msg=f"{name}: {os.path.basename(path)}")

    def test_constant_roof_pcf(self):
        data = {'kind': 'pcf', 'matrix': {'poly': [1, 1, 0, -1]},
                'roof': {'terms': [{'k': [0, 0, 0], 're': 1.0}]}, 'params': {'count': 2}, 'seed': 7}
        with tempfile.TemporaryDirectory() as tmp:
            run_experiment(self._config(data, tmp))
            with open(os.path.join(tmp, 'pcf.json'), 'r', encoding='utf-8') as f:
                summary = json.load(f)
            self.assertEqual(summary['count'], 2)
            self.assertLessEqual(summary['max_abs_value'], 1e-10)
            self.assertLessEqual(summary['max_antisymmetry_defect'], 1e-10)
            self.assertEqual(len(pd.read_csv(os.path.join(tmp, 'pcf_samples.csv'))), 2)

    def test_library_errors_become_experiment_failures(self):
        def failing(config):
            raise NotBunched('stable x unstable modulus >= 1')

        with open(CATALOG, 'r', encoding='utf-8') as f:
            data = json.load(f)
        with tempfile.TemporaryDirectory() as tmp, patch.dict(RUNNERS, {'catalog': failing}):
            with self.assertRaises(ExperimentFailed) as ctx:
                run_experiment(self._config(data, tmp))
            self.assertIsInstance(ctx.exception.__cause__, NotBunched)
            self.assertFalse(os.path.exists(os.path.join(tmp, 'manifest.json')))


if __name__ == '__main__':
    unittest.main()
