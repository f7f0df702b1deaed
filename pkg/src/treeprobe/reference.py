"""Published layer-sweep reference measurements, frozen as fixtures.

These are token-level (e1) sweep results for a 24-block BERT-large encoder:
slice M0 is the input embedding layer alone and slice Mi adds the first i
transformer blocks.  The columns are x_ssp, x_essp, and the true supervised
x_sp, each minimised with its own probe over a ~47k-sentence corpus.

The tabulated x_ssp is a greedy lower-bound *surrogate*, not the exact
set distance, so a handful of mid-stack rows (M14 to M17) report
x_sp_true slightly below x_ssp; see KNOWN_LOWER_BOUND_VIOLATIONS.
"""

from __future__ import annotations

from .metrics import MetricReport

#: (slice label, x_ssp, x_essp, x_sp_true)
BERT_LARGE_E1: tuple[tuple[str, float, float, float], ...] = (
    ("M0", 0.039, 5.382, 0.3084),
    ("M1", 0.017, 0.536, 0.2644),
    ("M2", 0.017, 0.526, 0.244),
    ("M3", 0.018, 0.348, 0.2016),
    ("M4", 0.033, 0.351, 0.1701),
    ("M5", 0.025, 0.52, 0.1622),
    ("M6", 0.023, 0.52, 0.1559),
    ("M7", 0.013, 0.345, 0.14),
    ("M8", 0.01, 0.347, 0.1424),
    ("M9", 0.011, 0.352, 0.1577),
    ("M10", 0.013, 0.359, 0.1415),
    ("M11", 0.021, 0.375, 0.1128),
    ("M12", 0.054, 0.391, 0.0975),
    ("M13", 0.076, 0.42, 0.0764),
    ("M14", 0.084, 0.467, 0.0651),
    ("M15", 0.088, 0.525, 0.0616),
    ("M16", 0.09, 0.663, 0.0656),
    ("M17", 0.086, 0.785, 0.0808),
    ("M18", 0.09, 0.883, 0.1155),
    ("M19", 0.09, 0.999, 0.1416),
    ("M20", 0.092, 1.045, 0.1615),
    ("M21", 0.094, 1.447, 0.2468),
    ("M22", 0.102, 1.715, 0.28634),
    ("M23", 0.107, 1.709, 0.3171),
    ("M24", 0.113, 1.837, 0.328),
)

#: Rows of the reference table where the greedy lower-bound surrogate exceeds
#: the measured supervised metric.  These are properties of the published
#: measurements themselves (greedy suboptimality at desk precision), kept
#: explicit so regression tests can pin them.
KNOWN_LOWER_BOUND_VIOLATIONS = ("M14", "M15", "M16", "M17")


def reference_reports() -> list[MetricReport]:
    """The reference table as metric reports (no position histograms)."""
    return [
        MetricReport.build(slice_id=label, x_ssp=x_ssp, x_essp=x_essp, x_sp_true=x_sp)
        for label, x_ssp, x_essp, x_sp in BERT_LARGE_E1
    ]
