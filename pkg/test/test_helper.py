import json
import os
import tempfile
import unittest
from unittest.mock import patch

import pandas as pd

from utils.helper import append_run_record, canonical_json, file_sha256, save_csv, save_json, write_manifest


class TestReportIO(unittest.TestCase):

    def test_canonical_json_ignores_key_order(self):
        self.assertEqual(canonical_json({'b': 1, 'a': [1, 2]}), canonical_json({'a': [1, 2], 'b': 1}))
        self.assertEqual(canonical_json({'b': 1, 'a': 2}), '{"a":2,"b":1}')

    def test_manifest_lists_report_hashes(self):
        with tempfile.TemporaryDirectory() as tmp:
            report = save_csv(pd.DataFrame({'x': [1, 2]}), os.path.join(tmp, 'table.csv'))
            with open(report, 'rb') as f:
                self.assertEqual(f.read(), b'x\n1\n2\n')
            manifest = write_manifest(tmp, 'abc', 5, [report])
            with open(manifest, 'r', encoding='utf-8') as f:
                data = json.load(f)
            self.assertEqual(data, {'config_hash': 'abc', 'seed': 5, 'files': {'table.csv': file_sha256(report)}})

    def test_run_records_append(self):
        with tempfile.TemporaryDirectory() as tmp:
            append_run_record(tmp, {'kind': 'pcf', 'seed': 1})
            path = append_run_record(tmp, {'kind': 'pcf', 'seed': 2})
            with open(path, 'r', encoding='utf-8') as f:
                self.assertEqual([json.loads(line)['seed'] for line in f], [1, 2])

    @patch('utils.helper.logger')
    @patch('utils.helper.open', side_effect=OSError('disk full'))
    def test_save_json_logs_and_reraises(self, mock_open, mock_logger):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(OSError):
                save_json({'a': 1}, os.path.join(tmp, 'report.json'))
        mock_logger.error.assert_called_once()
        self.assertIn('disk full', mock_logger.error.call_args[0][0])

    @patch('utils.helper.logger')
    def test_missing_file_hash_logs_and_reraises(self, mock_logger):
        with tempfile.TemporaryDirectory() as tmp, self.assertRaises(FileNotFoundError):
            file_sha256(os.path.join(tmp, 'missing.csv'))
        mock_logger.error.assert_called_once()


if __name__ == '__main__':
    unittest.main()
