"""Machine-readable verification cases and their file format."""

from .schema import (
    KINDS,
    VERDICTS,
    CaseRecord,
    CatalogError,
    CompiledCase,
    Instance,
    bundled_paths,
    compile_case,
    dump,
    dumps,
    load,
    load_bundled,
    parse_records,
    select,
    validate,
)

__all__ = [
    "KINDS",
    "VERDICTS",
    "CaseRecord",
    "CatalogError",
    "CompiledCase",
    "Instance",
    "bundled_paths",
    "compile_case",
    "dump",
    "dumps",
    "load",
    "load_bundled",
    "parse_records",
    "select",
    "validate",
]
