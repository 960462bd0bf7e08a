import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import pandas as pd

from specprep.exceptions import ConfigError, OutputError

PathLike = Union[str, Path]

# Enough digits for float64 values to survive a text round trip unchanged.
FLOAT_FORMAT = "%.17g"


def json_dumps(state: Any) -> str:
    text = json.dumps(state, ensure_ascii=False, indent=2, separators=(",", ": "))
    return text + "\n"


def load_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigError(path, f"Unable to read the file. {error.strerror or error}")
    return loads_json(text, source=path)


def loads_json(text: str, source: PathLike = "<string>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigError(
            source, f"Malformed JSON at line {error.lineno} column {error.colno}: {error.msg}"
        )


def reject_unknown_keys(
    record: Dict[str, Any], allowed: Iterable[str], source: PathLike = "<config>"
) -> None:
    unknown = sorted(set(record) - set(allowed))
    if unknown:
        raise ConfigError(source, f"Unknown key(s): {', '.join(unknown)}")


def _check_target(path: PathLike) -> Path:
    if not str(path).strip():
        raise OutputError(str(path), "An empty path was given.")
    return Path(path)


def write_text(path: PathLike, text: str) -> Path:
    target = _check_target(path)
    try:
        target.write_text(text, encoding="utf-8")
    except OSError as error:
        raise OutputError(target, error.strerror or str(error))
    return target


def write_json(path: PathLike, state: Any) -> Path:
    return write_text(path, json_dumps(state))


def write_frame(path: PathLike, frame: pd.DataFrame) -> Path:
    target = _check_target(path)
    try:
        frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as error:
        raise OutputError(target, error.strerror or str(error))
    return target


def read_table(
    path: PathLike, required: Iterable[str], optional: Optional[Iterable[str]] = None
) -> pd.DataFrame:
    """Read a small labelled CSV (rosters, assignments) as text columns."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise ConfigError(path, "The file does not exist.")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise ConfigError(path, str(error))
    frame.columns = [str(column).strip() for column in frame.columns]
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise ConfigError(path, f"Missing required column(s): {', '.join(missing)}")
    keep = list(required) + [column for column in optional or () if column in frame.columns]
    return frame[keep]
