"""LangGraph workflow package."""

from graph.workflow import SegmentationWorkflow

__all__ = ["SegmentationWorkflow"]
