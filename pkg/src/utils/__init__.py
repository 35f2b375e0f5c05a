"""Utils module for state analysis and result export."""
from .peak_analysis import central_peak, peak_analysis, peak_spacing, spacing_deviation
from .result_exporter import config_label, export_results, read_csv, read_json, read_jsonl, write_jsonl
from .wigner_analysis import negativity_volume, wigner, wigner_marginal

__all__ = [
    "central_peak",
    "peak_analysis",
    "peak_spacing",
    "spacing_deviation",
    "config_label",
    "export_results",
    "read_csv",
    "read_json",
    "read_jsonl",
    "write_jsonl",
    "negativity_volume",
    "wigner",
    "wigner_marginal",
]
