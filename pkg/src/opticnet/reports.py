"""Plain-text and machine-readable report rendering.

Every report is deterministic for a given scenario and seed: fixed float
formats, sorted keys, no wall-clock content.
"""

import json

import numpy as np


def _table(headers, rows) -> str:
    widths = [len(h) for h in headers]
    rendered = [[str(c) for c in row] for row in rows]
    for row in rendered:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) \
            + " |"
    sep = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    out = [sep, line(headers), sep]
    out += [line(r) for r in rendered]
    out.append(sep)
    return "\n".join(out) + "\n"


def characterization_table(records_by_line) -> str:
    """Retrieved span parameters, one row per span."""
    rows = []
    for line_id in sorted(records_by_line):
        for i, record in enumerate(records_by_line[line_id]):
            span = record.fitted
            alpha = float(np.mean(span.loss.knot_db_per_km))
            rows.append([
                line_id, i + 1, f"{span.length_km:.1f}",
                f"{span.raman_efficiency:.2f}",
                f"{span.dispersion_ps_nm_km:.1f}",
                f"{span.input_loss_db:.1f}", f"{span.output_loss_db:.1f}",
                f"{alpha:.3f}", f"{record.residual_rms_db:.4f}"])
    return "PHYSICAL LAYER CHARACTERIZATION\n" + _table(
        ["LINE", "SPAN", "L_S [km]", "C_R [1/W/km]", "D [ps/nm/km]",
         "l(0) [dB]", "l(L_S) [dB]", "mean alpha [dB/km]",
         "residual rms [dB]"], rows)


def working_point_table(solutions) -> str:
    """Amplifier working points, one block per line."""
    rows = []
    for solution in sorted(solutions, key=lambda s: s.ols_id):
        points = solution.operating_points
        labels = ["BST"] + [f"ILA {i}" for i in
                            range(1, len(points) - 1)] + ["PRE"]
        for label, op in zip(labels, points):
            power_mode = op.mode.value == "constant_output_power"
            rows.append([
                solution.ols_id, label,
                "--" if power_mode else f"{op.gain_db:.1f}",
                f"{op.tilt_db:.1f}",
                f"{op.p_out_dbm:.1f}" if power_mode else "--"])
    return "AMPLIFIER WORKING POINTS\n" + _table(
        ["LINE", "AMPLIFIER", "G [dB]", "T [dB]", "P_OUT [dBm]"], rows)


def performance_table(survey) -> str:
    """Transmission validation: prediction, estimated GSNR, margin per CUT.

    ``survey`` is a list of dicts with keys: path_id, cut_freq_hz, trx_type,
    format, predicted_db, ber, estimated_db (or None), margin_db (or None),
    lower_bound_db (or None).
    """
    rows = []
    for entry in survey:
        ber = entry["ber"]
        estimated = entry["estimated_db"]
        if estimated is not None:
            shown = round(entry["margin_db"], 1) + 0.0   # no negative zero
            est, margin = f"{estimated:.1f}", f"{shown:.1f}"
        elif entry.get("lower_bound_db") is not None:
            est, margin = f">{entry['lower_bound_db']:.1f}", "--"
        else:
            est, margin = "--", "--"
        rows.append([
            entry["path_id"], f"{entry['cut_freq_hz'] / 1e12:.0f}",
            entry["trx_type"], entry["format"],
            f"{entry['predicted_db']:.1f}",
            "--" if ber is None else f"{ber:.1e}", est, margin])
    return "TRANSMISSION PERFORMANCE VALIDATION\n" + _table(
        ["PATH", "CUT [THz]", "TRX", "FORMAT", "PREDICTED GSNR [dB]", "BER",
         "ESTIMATED GSNR [dB]", "MARGIN [dB]"], rows)


def recovery_table(report) -> str:
    doc = report.to_doc()
    rows = [[stage, f"{doc['stages_s'][stage]:.3f}"]
            for stage in ("topology_update", "lost_traffic_estimation",
                          "lpce", "establishment")]
    rows.append(["total_recovery", f"{doc['total_s']:.3f}"])
    header = (f"LIGHTPATH RECOVERY on {doc['link_id']}: "
              f"lost {doc['lost_gbps']}G, restored {doc['restored_gbps']}G\n")
    return header + _table(["INTERACTION", "EMULATED TIME [s]"], rows)


def gsnr_curve_tsv(path_maps, plan) -> str:
    """Per-channel GSNR curves for every computed path, tab-separated."""
    freqs = plan.frequencies()
    lines = ["path\tchannel\tfrequency_hz\tgsnr_db"]
    for path_map in path_maps:
        for channel, entry in enumerate(path_map.entries):
            lines.append(f"{path_map.path_id}\t{channel}\t"
                         f"{freqs[channel]:.0f}\t{entry.gsnr_db:.4f}")
    return "\n".join(lines) + "\n"


def write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
