from importlib.abc import Traversable
from importlib.resources import Package, files
from json import dumps, loads
from pathlib import Path
from typing import Any

__all__ = ["getResource", "getObject", "canonicalDumps", "readObject"]


def getResource(module: Package, filename: str) -> Traversable:
    return files(module).joinpath(filename)


def getObject(source: Traversable) -> Any:
    return loads(source.read_bytes())


def canonicalDumps(obj: Any) -> str:
    """Stable JSON text (sorted keys, no whitespace variance) used for hashing and
    for files that must be byte-identical across reruns."""
    return dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def readObject(path: Path) -> Any:
    return loads(path.read_bytes())
