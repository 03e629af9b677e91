"""
Result Writer
Run records and artifact files

Artifacts are written to a temporary file in the target directory and
moved into place, so a reader never sees a partial file. Every artifact
carries the run hash; big integers are written as decimal strings.
"""

import csv
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from logger_config import get_lab_logger

logger = get_lab_logger()

# Integers beyond this magnitude are serialized as strings
JSON_SAFE_INT = 2 ** 53


def _jsonable(value: Any) -> Any:
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, int):
        return value if abs(value) < JSON_SAFE_INT else str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):          # numpy scalars
        return _jsonable(value.item())
    if isinstance(value, (float, str)):
        return value
    return str(value)


def canonical_json(data: Dict[str, Any]) -> str:
    return json.dumps(_jsonable(data), sort_keys=True, separators=(",", ":"))


def config_hash(resolved: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON form of a resolved config"""
    return hashlib.sha256(canonical_json(resolved).encode("utf-8")).hexdigest()


@dataclass
class ResultRecord:
    """Outcome of one command"""
    run_id: str
    command: str
    outputs: Dict[str, Any]
    timings: Dict[str, float] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)
    created: str = field(default_factory=lambda: datetime.now().isoformat(timespec="seconds"))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "command": self.command,
            "outputs": _jsonable(self.outputs),
            "timings": self.timings,
            "artifacts": self.artifacts,
            "created": self.created,
        }


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.debug(f"Wrote {path}")


def write_jsonl(path: Path, records: Iterable[Dict[str, Any]], run_id: str) -> Path:
    """One JSON object per line, each tagged with the run hash"""
    path = Path(path)
    lines = [canonical_json(dict(record, run_id=run_id)) for record in records]
    _atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]], run_id: str) -> Path:
    """CSV table with a leading `# run_id=...` comment line"""
    path = Path(path)
    lines: List[str] = []

    class _Sink:
        def write(self, chunk):
            lines.append(chunk)

    writer = csv.writer(_Sink(), lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([str(v) if isinstance(v, int) and not isinstance(v, bool) else v for v in row])
    _atomic_write(path, f"# run_id={run_id}\n" + "".join(lines))
    return path


def write_int_list(path: Path, values: Iterable[int], run_id: str) -> Path:
    """Plain integer list, one per line, after a `# run_id=...` line"""
    path = Path(path)
    body = "".join(f"{int(v)}\n" for v in values)
    _atomic_write(path, f"# run_id={run_id}\n" + body)
    return path


def append_record(path: Path, record: ResultRecord) -> Path:
    """Append a run record to the JSON-lines run log"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as f:
        f.write(canonical_json(record.to_dict()) + "\n")
    return path


def read_int_list(path: Path) -> List[int]:
    """Read back an integer list (comment lines skipped)"""
    values = []
    with open(path, "r") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                values.append(int(line))
    return values
