# export_utils.py
import csv
import hashlib
import io
import json
import logging
import os
from datetime import datetime, timezone

import numpy as np

from models.errors import ExportError

logger = logging.getLogger(__name__)


def _plain(value):
    """numpy / enum / complex values as JSON-friendly builtins."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else repr(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, 'value') and isinstance(getattr(value, 'value'), str):
        return value.value
    return value


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if hasattr(value, 'value') and isinstance(getattr(value, 'value'), str):
        return value.value
    return str(value)


def dumps_json(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class ResultWriter:
    """Writes the data files of one command run plus its manifest."""

    def __init__(self, out_dir, command, config, version):
        self.out_dir = out_dir
        self.command = command
        self.config = config
        self.version = version
        self.files = {}

    def _path(self, name):
        try:
            os.makedirs(self.out_dir, exist_ok=True)
        except OSError as e:
            raise ExportError(f"cannot create output directory {self.out_dir}: {e}") from e
        return os.path.join(self.out_dir, name)

    def _write(self, name, text):
        path = self._path(name)
        data = text.encode('utf-8')
        try:
            with open(path, 'wb') as f:
                f.write(data)
        except OSError as e:
            raise ExportError(f"cannot write {path}: {e}") from e
        self.files[name] = hashlib.sha256(data).hexdigest()
        logger.debug(f"wrote {path} ({len(data)} bytes)")
        return path

    def write_csv(self, name, header, rows):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if isinstance(row, dict):
                row = [row[h] for h in header]
            writer.writerow([_cell(v) for v in row])
        return self._write(name, buffer.getvalue())

    def write_json(self, name, obj):
        return self._write(name, dumps_json(obj))

    def write_text(self, name, text):
        return self._write(name, text)

    def manifest(self):
        config_text = self.config.to_text()
        return {
            "command": self.command,
            "version": self.version,
            "config_sha256": hashlib.sha256(config_text.encode('utf-8')).hexdigest(),
            "config": config_text,
            "tolerances": {k: v for k, v in self.config.values.items() if k.startswith('TOL_')},
            "files": dict(sorted(self.files.items())),
            "created_utc": datetime.now(timezone.utc).isoformat(timespec='seconds'),
        }

    def write_manifest(self):
        path = self._path(f"{self.command}_manifest.json")
        try:
            with open(path, 'w', encoding='utf-8', newline="\n") as f:
                f.write(dumps_json(self.manifest()))
        except OSError as e:
            raise ExportError(f"cannot write {path}: {e}") from e
        logger.info(f"{self.command}: {len(self.files)} files written to {self.out_dir}")
        return path
