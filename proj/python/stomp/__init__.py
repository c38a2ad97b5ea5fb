"""Python access to the stomp C++ core: layouts, oracles and experiment runs."""

from ._stomp import (
    AGGREGATE_COLUMNS,
    LOG_COLUMNS,
    format_number,
    hallway_subtask_values,
    layout,
    parse_layout,
    preset_text,
    presets,
    read_log_csv,
    run,
    v_mu,
    v_star,
)

__all__ = [
    "AGGREGATE_COLUMNS",
    "LOG_COLUMNS",
    "format_number",
    "hallway_subtask_values",
    "layout",
    "parse_layout",
    "preset_text",
    "presets",
    "read_log_csv",
    "run",
    "v_mu",
    "v_star",
]
