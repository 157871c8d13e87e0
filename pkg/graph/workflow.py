"""LangGraph workflow driving a segmentation run from files to files."""

import os
from typing import Any, Callable, Dict, List, Optional, TypedDict

from langgraph.graph import END, StateGraph

from classifier.segmenter import segment
from config import RESAMPLE_POINTS
from dataset_io.atlas import load_atlas
from dataset_io.fibr import read_fiber_file
from dataset_io.results import write_assignments, write_segmented_bundles
from geometry.resampling import resample_dataset
from models.errors import FiberSegError
from models.schemas import OracleMode
from validation.oracle import oracle_classify_with_stats

ASSIGNMENTS_NAME = "assignments.csv"
BUNDLES_DIR = "bundles"
STATS_NAME = "stats.txt"

ORACLE_MODES = {
    "oracle-endpoint": OracleMode.ENDPOINT,
    "oracle-exact": OracleMode.EXACT,
}


class SegmentationState(TypedDict):
    """State passed between nodes in the graph."""
    subject_path: str
    atlas_dir: str
    out_dir: str
    mode: str
    config: Any
    dataset: Optional[Any]
    atlas: Optional[Any]
    assignments: Optional[Any]
    stats: Optional[Any]
    current_step: str
    messages: List[str]
    errors: List[str]


class SegmentationWorkflow:
    """LangGraph workflow: load, resample when needed, classify, write."""

    def __init__(self, callback: Callable[[str, str], None] = None,
                 reporter: Callable[[Any, Any, Any], str] = None):
        """
        Initialize the segmentation workflow.

        Args:
            callback: Optional callback(step, message) for progress updates
            reporter: Optional reporter(assignments, atlas, stats) whose text
                is written to stats.txt
        """
        self.callback = callback or (lambda s, m: None)
        self.reporter = reporter
        self.graph = self._build_graph()

    def _notify(self, step: str, message: str):
        """Send progress notification."""
        self.callback(step, message)

    def _fail(self, state: SegmentationState, step: str, error: Exception) -> SegmentationState:
        state["errors"].append(str(error))
        state["current_step"] = "error"
        self._notify(step, f"failed: {error}")
        return state

    def _load_node(self, state: SegmentationState) -> SegmentationState:
        """Loading node - reads the subject and the atlas."""
        self._notify("loading", f"reading {state['subject_path']}")
        try:
            state["dataset"] = read_fiber_file(state["subject_path"])
            state["atlas"] = load_atlas(state["atlas_dir"])
        except (FiberSegError, OSError) as e:
            return self._fail(state, "loading", e)

        needs_resampling = not state["dataset"].is_resampled(RESAMPLE_POINTS)
        state["current_step"] = "resampling" if needs_resampling else "classifying"
        state["messages"].append(
            f"loaded {len(state['dataset'])} fibers and {state['atlas'].n_centroids} centroids"
        )
        return state

    def _resample_node(self, state: SegmentationState) -> SegmentationState:
        """Resampling node - brings every subject fiber to 21 points."""
        self._notify("resampling", f"resampling {len(state['dataset'])} fibers to {RESAMPLE_POINTS} points")
        try:
            state["dataset"] = resample_dataset(state["dataset"], RESAMPLE_POINTS)
        except FiberSegError as e:
            return self._fail(state, "resampling", e)
        state["current_step"] = "classifying"
        state["messages"].append("subject resampled")
        return state

    def _classify_node(self, state: SegmentationState) -> SegmentationState:
        """Classification node - cascade or brute-force oracle."""
        mode = state["mode"]
        self._notify("classifying", f"classifying with {mode}")
        config = state["config"]
        try:
            if mode in ORACLE_MODES:
                assignments, stats = oracle_classify_with_stats(
                    state["dataset"], state["atlas"], ORACLE_MODES[mode], config.worker_count
                )
            else:
                assignments, stats = segment(state["dataset"], state["atlas"], config)
        except FiberSegError as e:
            return self._fail(state, "classifying", e)

        state["assignments"] = assignments
        state["stats"] = stats
        state["current_step"] = "writing"
        state["messages"].append(
            f"{len(assignments) - assignments.unassigned_count} of {len(assignments)} fibers assigned"
        )
        return state

    def _write_node(self, state: SegmentationState) -> SegmentationState:
        """Writing node - assignments CSV, per-bundle files, stats summary."""
        out_dir = state["out_dir"]
        self._notify("writing", f"writing results to {out_dir}")
        try:
            os.makedirs(out_dir, exist_ok=True)
            write_assignments(state["assignments"], state["atlas"], os.path.join(out_dir, ASSIGNMENTS_NAME))
            write_segmented_bundles(state["dataset"], state["assignments"], state["atlas"],
                                    os.path.join(out_dir, BUNDLES_DIR))
            if self.reporter:
                text = self.reporter(state["assignments"], state["atlas"], state["stats"])
                with open(os.path.join(out_dir, STATS_NAME), "w", encoding="utf-8") as fh:
                    fh.write(text)
        except (FiberSegError, OSError) as e:
            return self._fail(state, "writing", e)
        state["current_step"] = "complete"
        state["messages"].append("results written")
        return state

    def _should_continue(self, state: SegmentationState) -> str:
        """Determine next node based on current step."""
        step = state["current_step"]

        if step == "resampling":
            return "resample"
        elif step == "classifying":
            return "classify"
        elif step == "writing":
            return "write"
        else:
            return END

    def _build_graph(self):
        """Build the LangGraph workflow."""
        workflow = StateGraph(SegmentationState)

        workflow.add_node("load", self._load_node)
        workflow.add_node("resample", self._resample_node)
        workflow.add_node("classify", self._classify_node)
        workflow.add_node("write", self._write_node)

        workflow.set_entry_point("load")

        workflow.add_conditional_edges(
            "load",
            self._should_continue,
            {
                "resample": "resample",
                "classify": "classify",
                END: END
            }
        )
        workflow.add_conditional_edges(
            "resample",
            self._should_continue,
            {
                "classify": "classify",
                END: END
            }
        )
        workflow.add_conditional_edges(
            "classify",
            self._should_continue,
            {
                "write": "write",
                END: END
            }
        )
        workflow.add_edge("write", END)

        return workflow.compile()

    def run(self, subject_path: str, atlas_dir: str, out_dir: str, config,
            mode: str = "cascade") -> Dict[str, Any]:
        """
        Run the complete segmentation workflow.

        Args:
            subject_path: FIBR subject file
            atlas_dir: atlas directory
            out_dir: destination of assignments.csv, bundles/ and stats.txt
            config: CascadeConfig for the cascade and the worker count
            mode: cascade, oracle-endpoint or oracle-exact

        Returns:
            Final state; ``errors`` is empty on success
        """
        initial_state: SegmentationState = {
            "subject_path": subject_path,
            "atlas_dir": atlas_dir,
            "out_dir": out_dir,
            "mode": mode,
            "config": config,
            "dataset": None,
            "atlas": None,
            "assignments": None,
            "stats": None,
            "current_step": "loading",
            "messages": [],
            "errors": []
        }

        return self.graph.invoke(initial_state)
