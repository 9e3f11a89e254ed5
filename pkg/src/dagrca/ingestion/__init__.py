"""Metric loading (CSV, Prometheus), alignment and standardization."""
from .align import align, align_and_standardize, resample
from .csvio import load_csv, write_csv
from .frame import MetricFrame, split_metric_id, standardize
from .prometheus import fetch_prometheus, parse_query_range, query_range_url, read_queries
from .series import RawSeries, ScrapeWindow

__all__ = [
    "MetricFrame",
    "RawSeries",
    "ScrapeWindow",
    "align",
    "align_and_standardize",
    "fetch_prometheus",
    "load_csv",
    "parse_query_range",
    "query_range_url",
    "read_queries",
    "resample",
    "split_metric_id",
    "standardize",
    "write_csv",
]
