"""Command-line pipeline: configuration, dataset files, synthesis, dispatch."""

from .config import PipelineConfig, apply_overrides, dump_config, load_config
from .dataset import load_graphs, save_graphs
from .synth import synth_graph_dataset

__all__ = [
    "PipelineConfig",
    "apply_overrides",
    "dump_config",
    "load_config",
    "load_graphs",
    "save_graphs",
    "synth_graph_dataset",
]
