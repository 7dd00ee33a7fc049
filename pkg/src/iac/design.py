"""End-to-end design: channels -> graph -> precoders -> receivers -> report,
and the versioned JSON bundle that carries a design between commands."""

import json
from dataclasses import dataclass

from .errors import InfeasibleConfig, InvalidConfig
from .feasibility import check_feasibility
from .graph import (DEFAULT_RETRY_BUDGET, AlignmentEquationSet, ConstructionTrace, IacGraph,
                    build_graph)
from .solver import PrecoderSet, ReceiverSet, design_receivers, solve_precoders
from .system_model import ChannelSet, SystemConfig, generate_channels
from .verifier import DesignReport, Tolerances, verify_design

BUNDLE_VERSION = 1


@dataclass
class Design:
    config: SystemConfig
    channels: ChannelSet
    graph: IacGraph
    equations: AlignmentEquationSet
    precoders: PrecoderSet
    receivers: ReceiverSet
    report: DesignReport
    channel_seed: int = None
    graph_seed: int = None
    trace: ConstructionTrace = None

    def to_dict(self):
        return {
            "version": BUNDLE_VERSION,
            "config": self.config.to_dict(),
            "channel_seed": self.channel_seed,
            "graph_seed": self.graph_seed,
            "channels": self.channels.to_dict(),
            "graph": self.graph.to_dict(),
            "equations": self.equations.to_dict(),
            "precoders": self.precoders.to_dict(),
            "receivers": self.receivers.to_dict(),
            "report": self.report.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            if doc.get("version") != BUNDLE_VERSION:
                raise InvalidConfig(f"unsupported bundle version {doc.get('version')!r}")
            config = SystemConfig.from_dict(doc["config"])
            graph = IacGraph.from_dict(doc["graph"])
            return cls(
                config=config,
                channels=ChannelSet.from_dict(doc["channels"]),
                graph=graph,
                equations=AlignmentEquationSet.from_graph(graph),
                precoders=PrecoderSet.from_dict(doc["precoders"]),
                receivers=ReceiverSet.from_dict(doc["receivers"]),
                report=DesignReport.from_dict(doc["report"]),
                channel_seed=doc.get("channel_seed"),
                graph_seed=doc.get("graph_seed"),
            )
        except InvalidConfig:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InvalidConfig(f"malformed design bundle: {exc!r}") from exc

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise InvalidConfig(f"{path}: bundle must be a JSON object")
        return cls.from_dict(doc)


def run_design(config, channel_seed=0, graph_seed=0, optimal=False,
               retry_budget=DEFAULT_RETRY_BUDGET, tolerances=None, channels=None,
               eigen_choice="max_modulus", phase=0.0):
    """Run the full pipeline for one configuration.

    Raises :class:`InfeasibleConfig` before any construction when the tuple
    cannot be served; numerical trouble surfaces as the specific
    :class:`~iac.errors.NumericalError` subclass. Verification failures do
    not raise; check ``design.report.passed``.
    """
    verdict = check_feasibility(config)
    if not verdict.feasible:
        raise InfeasibleConfig(
            "tuple violates " + ", ".join(q.which for q in verdict.failed_inequalities))
    if channels is None:
        channels = generate_channels(config, channel_seed)
    graph, equations, trace = build_graph(config, graph_seed, retry_budget, optimal)
    V = solve_precoders(graph, channels, config, seed=graph_seed,
                        eigen_choice=eigen_choice, phase=phase)
    U = design_receivers(channels, V, config)
    report = verify_design(channels, V, U, equations, config, tolerances or Tolerances())
    return Design(config, channels, graph, equations, V, U, report,
                  channel_seed, graph_seed, trace)
