import csv

import pytest

from stereopose.metrics import EvalReport, FrameEval, aggregate
from stereopose.reporting import (
    ablation_figures,
    ablation_table,
    eval_table,
    fixed_width_table,
    format_ablation_table,
    format_eval_report,
    format_stats_table,
    loss_figures,
    stats_table,
    write_delimited,
    write_eval_report,
    write_stats_report,
    write_ablation_report,
)
from stereopose.training import RunReport


@pytest.fixture()
def report():
    rows = [
        FrameEval(category="boxing", run=0, mpjpe_mm=10.0, pa_mpjpe_mm=5.0),
        FrameEval(category="boxing", run=0, mpjpe_mm=20.0, pa_mpjpe_mm=10.0),
        FrameEval(category="dancing", run=0, mpjpe_mm=40.0, pa_mpjpe_mm=30.0),
    ]
    return aggregate(rows)


@pytest.fixture()
def ablation_rows():
    good = {
        "name": "stereo-shared-d18-ws-separate",
        "cell": {"variant": "stereo-shared"},
        "overall": {
            "mpjpe_mm_mean": 79.06,
            "mpjpe_mm_sigma": 0.25,
            "pa_mpjpe_mm_mean": 59.95,
            "pa_mpjpe_mm_sigma": 0.1,
        },
        "encoder_params": 11176512,
        "report": {},
        "runs": [],
    }
    bad = {
        "name": "monocular-d18-ws-separate",
        "cell": {"variant": "monocular"},
        "error": "ValueError('boom')",
    }
    return [good, bad]


def test_fixed_width_table_layout():
    text = fixed_width_table(
        ["name", "value"], [["alpha", "1.00"], ["b", "123.45"]]
    )
    assert text.splitlines() == [
        "name    value",
        "-----  ------",
        "alpha    1.00",
        "b      123.45",
    ]


def test_write_delimited_round_trip(tmp_path):
    path = write_delimited(
        tmp_path / "t.csv", ["a", "b"], [["x", 1], ["y", 2]], delimiter=";"
    )
    with open(path, newline="") as fh:
        back = list(csv.reader(fh, delimiter=";"))
    assert back == [["a", "b"], ["x", "1"], ["y", "2"]]


def test_eval_table_rows(report):
    header, csv_rows, text_rows = eval_table(report)
    assert header[0] == "category"
    assert [r[0] for r in csv_rows] == ["boxing", "dancing", "overall"]
    assert csv_rows[0][1] == 2  # boxing frame count
    assert csv_rows[2][1] == 3  # overall counts every frame
    assert text_rows[0][2] == "15.00 (0.00)"
    header, csv_rows, _ = eval_table(report, by_category=False)
    assert [r[0] for r in csv_rows] == ["overall"]


def test_format_eval_report(report):
    text = format_eval_report(report)
    assert "pose error over 1 run(s), device frame" in text
    assert "boxing" in text and "overall" in text
    compact = format_eval_report(report, by_category=False)
    assert "boxing" not in compact


def test_write_eval_report(tmp_path, report):
    paths = write_eval_report(report, tmp_path)
    for key in ("table", "text", "json"):
        assert paths[key].exists()
    assert paths["figures"] and all(p.exists() for p in paths["figures"])
    assert paths["figures"][0].suffix == ".png"
    with open(paths["table"], newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 4  # header + two categories + overall
    back = EvalReport.load(paths["json"])
    assert back.to_dict() == report.to_dict()


def test_ablation_table_handles_errors(ablation_rows):
    header, csv_rows, text_rows = ablation_table(ablation_rows)
    assert csv_rows[0][1] == 11176512
    assert csv_rows[0][-1] == ""
    assert csv_rows[1][-1] == "ValueError('boom')"
    assert text_rows[1][2] == "failed"
    text = format_ablation_table(ablation_rows)
    assert "79.06 (0.25)" in text
    assert "failed" in text


def test_write_ablation_report(tmp_path, ablation_rows):
    paths = write_ablation_report(ablation_rows, tmp_path)
    assert paths["table"].exists()
    assert paths["text"].exists()
    assert len(paths["figures"]) == 1 and paths["figures"][0].exists()
    # figures skip cleanly when every cell failed
    assert ablation_figures([ablation_rows[1]], tmp_path / "none") == []


def test_stats_report(tmp_path, micro_root):
    from stereopose.datagen import compute_keypoint_stats

    stats = compute_keypoint_stats(micro_root)
    header, rows = stats_table(stats)
    assert header == ["keypoint", "axis", "mean_cm", "variance_cm2"]
    assert len(rows) == 6  # two keypoints x three axes
    assert {r[0] for r in rows} == {"head", "left_foot"}
    text = format_stats_table(stats)
    assert "hip midpoint" in text
    paths = write_stats_report(stats, tmp_path)
    assert paths["table"].exists() and paths["text"].exists()
    assert all(p.exists() for p in paths["figures"])


def test_loss_figures(tmp_path):
    base = dict(
        strategy="separate",
        config_hash="x",
        val_losses={"pose2d": [0.5, 0.4]},
        eval=None,
        param_checksums={},
        checkpoints={},
        wall_clock_s=1.0,
    )
    positive = RunReport(
        seed=3, train_losses={"pose2d": [1.0, 0.5], "pose3d": [2.0, 1.0]}, **base
    )
    paths = loss_figures(positive, tmp_path)
    assert paths == [tmp_path / "loss_curves_seed3.png"]
    assert paths[0].exists()
    # a converged 3D phase dips negative; the figure must still render
    negative = RunReport(
        seed=4, train_losses={"pose3d": [0.2, -0.015]}, **base
    )
    paths = loss_figures(negative, tmp_path)
    assert paths[0].exists()
