import hashlib
import json
import os
from typing import Dict, Iterable

import pandas as pd

from scripts.logging_config import logger


def canonical_json(data) -> str:
    """
    Serializes data with sorted keys and no whitespace.

    Args:
        data: JSON-serializable value.

    Returns:
        str: The canonical JSON text, identical for equal values.
    """
    return json.dumps(data, sort_keys=True, separators=(',', ':'))


def config_hash(data: dict) -> str:
    """SHA-256 of the canonical JSON form of a config dictionary."""
    return hashlib.sha256(canonical_json(data).encode('utf-8')).hexdigest()


def file_sha256(path: str) -> str:
    """
    Hashes a file in 64 KiB blocks.

    Args:
        path (str): File to hash.

    Returns:
        str: Hex SHA-256 digest of the file contents.
    """
    digest = hashlib.sha256()
    try:
        with open(path, 'rb') as f:
            for block in iter(lambda: f.read(1 << 16), b''):
                digest.update(block)
    except OSError as e:
        logger.error(f"Error hashing {path}: {e}")
        raise
    return digest.hexdigest()


def save_json(data, path: str) -> str:
    """
    Writes data as indented JSON with sorted keys and a trailing newline.

    Args:
        data: JSON-serializable value.
        path (str): Output path; missing parent directories are created.

    Returns:
        str: The path written.
    """
    try:
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write('\n')
    except OSError as e:
        logger.error(f"Error saving JSON report {path}: {e}")
        raise
    logger.debug(f"Saved {path}")
    return path


def save_csv(frame: pd.DataFrame, path: str) -> str:
    """
    Writes a frame as CSV without the index, with '\\n' line endings on every platform.

    Args:
        frame (pd.DataFrame): Table to write.
        path (str): Output path; missing parent directories are created.

    Returns:
        str: The path written.
    """
    try:
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        frame.to_csv(path, index=False, lineterminator='\n')
    except OSError as e:
        logger.error(f"Error saving CSV report {path}: {e}")
        raise
    logger.debug(f"Saved {len(frame)} rows to {path}")
    return path


def write_manifest(out_dir: str, cfg_hash: str, seed: int, files: Iterable[str]) -> str:
    """
    Writes manifest.json listing every report file with its content hash.

    Args:
        out_dir (str): Output directory holding the reports.
        cfg_hash (str): Hash of the effective config.
        seed (int): Seed of the run.
        files (Iterable[str]): Report paths.

    Returns:
        str: Path of the manifest.
    """
    entries: Dict[str, str] = {os.path.relpath(p, out_dir): file_sha256(p) for p in sorted(files)}
    manifest = {'config_hash': cfg_hash, 'seed': seed, 'files': entries}
    return save_json(manifest, os.path.join(out_dir, 'manifest.json'))


def append_run_record(out_dir: str, record: dict) -> str:
    """Appends one run to runs.jsonl in out_dir, the persisted catalog of experiments run there."""
    path = os.path.join(out_dir, 'runs.jsonl')
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, 'a', encoding='utf-8') as f:
            f.write(canonical_json(record) + '\n')
    except OSError as e:
        logger.error(f"Error appending run record to {path}: {e}")
        raise
    return path
