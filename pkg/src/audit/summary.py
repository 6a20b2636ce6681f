from src.schemas import AuditReport


def describe_report(report: AuditReport, reference: AuditReport | None = None) -> str:
    """Generate a human-readable explanation of an audit report."""
    parts = []

    cf = report.cf_score_mean_abs
    parts.append(
        f"Black box {report.model} is {_score_level(cf.mean)} counterfactually fair: "
        f"score {cf.mean:.3f} ± {cf.std:.3f} over {report.repetitions} repetition(s) "
        f"on {report.n} records."
    )
    parts.append(
        f"Predicted labels unchanged for {report.cf_score_flip_rate.mean:.1%} of records; "
        f"statistical parity {report.statistical_parity.mean:.3f}."
    )

    # Relative to another audited model
    if reference is not None:
        delta = cf.mean - reference.cf_score_mean_abs.mean
        spread = 2.0 * max(cf.std, reference.cf_score_mean_abs.std)
        if abs(delta) <= spread:
            parts.append(f"Not separable from {reference.model} (Δ{delta:+.3f}).")
        else:
            direction = "fairer" if delta > 0 else "less fair"
            parts.append(f"{direction.capitalize()} than {reference.model} (Δ{delta:+.3f}).")

    if report.sanity is not None:
        s = report.sanity
        if s.passed:
            parts.append(
                f"Sanity check passed: accuracy {s.accuracy_original:.3f} on original and "
                f"{s.accuracy_reconstructed:.3f} on reconstructed data."
            )
        else:
            parts.append(f"Sanity check failed: {s.warning}.")

    return " ".join(parts)


def _score_level(score: float) -> str:
    if score >= 0.95:
        return "highly"
    if score >= 0.8:
        return "mostly"
    if score >= 0.6:
        return "moderately"
    if score >= 0.4:
        return "weakly"
    return "not"
