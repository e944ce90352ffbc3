"""
Prompt absorption and attention-map analysis
"""
from .absorption import (AbsorptionReport, absorption_ratio, absorption_weights, image_reports,
                         summarize_reports, track_absorption)
from .heatmaps import attention_map_export, export_heatmaps, normalize_grid

__all__ = [
    'AbsorptionReport',
    'absorption_weights',
    'absorption_ratio',
    'image_reports',
    'summarize_reports',
    'track_absorption',
    'attention_map_export',
    'export_heatmaps',
    'normalize_grid',
]
