"""Python access to the treasury data warehouse core."""

import json
import os

from ._tdw import (
    TdwError,
    build_time_table,
    pooled_t,
    summarize,
    time_attributes,
    time_benefit,
)
from . import _tdw

__all__ = [
    "TdwError",
    "Warehouse",
    "build_time_table",
    "generate_dataset",
    "pooled_t",
    "run_etl",
    "summarize",
    "time_attributes",
    "time_benefit",
]


def run_etl(config_path):
    """Runs the pipeline described by an etl.conf file; returns the report."""
    return json.loads(_tdw.run_etl_json(os.fspath(config_path)))


def generate_dataset(directory, **params):
    """Writes a synthetic input set; returns (movements, forecasts)."""
    text = "".join(f"{k} = {v}\n" for k, v in params.items())
    return _tdw.generate_dataset(text, os.fspath(directory))


class Warehouse:
    """Pivot queries over the committed store named by an etl.conf file."""

    def __init__(self, etl_config):
        self._impl = _tdw.Warehouse(os.fspath(etl_config))

    @classmethod
    def open(cls, etl_config):
        return cls(etl_config)

    @property
    def fact_count(self):
        return self._impl.fact_count

    def query(self, request):
        """Same request and result shapes as POST /api/pivot."""
        return json.loads(self._impl.query_json(json.dumps(request)))

    def query_csv(self, request):
        return self._impl.query_csv(json.dumps(request))

    def metadata(self):
        return json.loads(self._impl.metadata_json())
