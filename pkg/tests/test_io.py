import numpy as np
import pytest

from mvinfer.errors import DataError, DesignError
from mvinfer.io import CsvDialect, read_long_csv, read_wide_csv


def write(path, text):
    path.write_text(text.strip() + "\n", encoding="utf-8")
    return path


def o2cons_like(tmp_path):
    lines = ["O2,Group,Staphylococci,Time,Subject"]
    value = 0.0
    for group in ("P", "V"):
        for k in range(3):
            subject = f"{group}{k}"
            for staph in ("0", "1"):
                for time in ("6", "12", "18"):
                    value += 0.25
                    lines.append(f"{value},{group},{staph},{time},{subject}")
    return write(tmp_path / "o2.csv", "\n".join(lines))


class TestLongRm:
    def test_o2cons_shape(self, tmp_path):
        data, layout = read_long_csv(
            o2cons_like(tmp_path),
            "O2 ~ Group * Staphylococci * Time",
            "Subject",
            mode="rm",
            n_subplot_factors=2,
        )
        assert layout.a == 2
        assert layout.d == 6
        assert layout.cells == [("P",), ("V",)]
        # numeric-aware time order inside components
        assert layout.components[:3] == [("0", "6"), ("0", "12"), ("0", "18")]
        assert data.values.shape == (6, 6)

    def test_minimal_design(self, tmp_path):
        path = write(
            tmp_path / "t.csv",
            "y,g,t,id\n1,a,1,s1\n2,a,2,s1\n3,b,1,s2\n4,b,2,s2\n"
            "5,a,1,s3\n6,a,2,s3\n7,b,1,s4\n8,b,2,s4",
        )
        data, layout = read_long_csv(path, "y ~ g * t", "id", mode="rm")
        assert data.n_subjects == 4
        assert layout.a == 2 and layout.d == 2

    def test_dialect_equivalence(self, tmp_path):
        dotted = write(tmp_path / "a.csv", "y,t,id\n1.5,1,s1\n2.25,2,s1\n3.5,1,s2\n4,2,s2")
        comma = write(tmp_path / "b.csv", "y;t;id\n1,5;1;s1\n2,25;2;s1\n3,5;1;s2\n4;2;s2")
        data_a, _ = read_long_csv(dotted, "y ~ t", "id", mode="rm")
        data_b, _ = read_long_csv(
            comma, "y ~ t", "id", mode="rm",
            dialect=CsvDialect(separator=";", decimal=","),
        )
        np.testing.assert_array_equal(data_a.values, data_b.values)

    def test_duplicate_record(self, tmp_path):
        path = write(
            tmp_path / "d.csv",
            "y,t,id\n1,1,s1\n2,1,s1\n3,2,s1\n4,1,s2\n5,2,s2",
        )
        with pytest.raises(DataError, match="s1"):
            read_long_csv(path, "y ~ t", "id", mode="rm")

    def test_subject_spanning_cells(self, tmp_path):
        path = write(
            tmp_path / "s.csv",
            "y,g,t,id\n1,a,1,s1\n2,b,2,s1\n3,a,1,s2\n4,a,2,s2",
        )
        with pytest.raises(DataError, match="s1"):
            read_long_csv(path, "y ~ g * t", "id", mode="rm")

    def test_incomplete_subject_named(self, tmp_path):
        path = write(
            tmp_path / "i.csv",
            "y,t,id\n1,1,s1\n2,2,s1\n3,1,s2\n4,1,s3\n5,2,s3",
        )
        with pytest.raises(DataError, match="s2"):
            read_long_csv(path, "y ~ t", "id", mode="rm")

    def test_incomplete_subject_dropped_with_warning(self, tmp_path):
        path = write(
            tmp_path / "i.csv",
            "y,t,id\n1,1,s1\n2,2,s1\n3,1,s2\n4,1,s3\n5,2,s3",
        )
        with pytest.warns(UserWarning, match="dropped 1"):
            data, _ = read_long_csv(
                path, "y ~ t", "id", mode="rm", drop_incomplete=True
            )
        assert data.n_subjects == 2

    def test_missing_response_counts_as_incomplete(self, tmp_path):
        path = write(
            tmp_path / "m.csv",
            "y,t,id\n1,1,s1\nNA,2,s1\n3,1,s2\n4,2,s2",
        )
        with pytest.raises(DataError, match="s1"):
            read_long_csv(path, "y ~ t", "id", mode="rm")
        with pytest.warns(UserWarning):
            data, _ = read_long_csv(
                path, "y ~ t", "id", mode="rm", drop_incomplete=True
            )
        assert data.subjects == ["s2"]

    def test_unparseable_number_names_location(self, tmp_path):
        path = write(tmp_path / "u.csv", "y,g,t,id\noops,a,1,s1\n2,a,2,s1")
        with pytest.raises(DataError, match=r"'y'.*line 2"):
            read_long_csv(path, "y ~ g * t", "id", mode="rm")

    def test_missing_column(self, tmp_path):
        path = write(tmp_path / "c.csv", "y,g,id\n1,a,s1")
        with pytest.raises(DataError, match="'t'"):
            read_long_csv(path, "y ~ g * t", "id", mode="rm")

    def test_empty_cell_rejected(self, tmp_path):
        # levels a/b for g and x/y for h exist, but no (b, x) subjects
        path = write(
            tmp_path / "e.csv",
            "v,g,h,t,id\n"
            "1,a,x,1,s1\n2,a,x,2,s1\n1,a,y,1,s2\n2,a,y,2,s2\n"
            "1,b,y,1,s3\n2,b,y,2,s3",
        )
        with pytest.raises(DataError, match="b:x"):
            read_long_csv(path, "v ~ g * h * t", "id", mode="rm")

    def test_canonical_subject_order(self, tmp_path):
        path = write(
            tmp_path / "o.csv",
            "y,g,t,id\n1,b,1,s9\n2,b,2,s9\n3,a,1,s10\n4,a,2,s10\n5,a,1,s2\n6,a,2,s2",
        )
        data, _ = read_long_csv(path, "y ~ g * t", "id", mode="rm")
        # cell a before cell b; labels sort as strings since they are not numeric
        assert data.subjects == ["s10", "s2", "s9"]


class TestLongManova:
    def test_occurrence_order_components(self, tmp_path):
        path = write(
            tmp_path / "m.csv",
            "resp,sex,id\n1,M,s1\n2,M,s1\n3,M,s2\n4,M,s2\n5,W,s3\n6,W,s3\n7,W,s4\n8,W,s4",
        )
        data, layout = read_long_csv(path, "resp ~ sex", "id", mode="manova-long")
        assert layout.d == 2
        assert layout.component_headers() == ["1", "2"]
        np.testing.assert_array_equal(data.values[0], [1.0, 2.0])

    def test_mismatched_dimension_count(self, tmp_path):
        path = write(
            tmp_path / "m.csv",
            "resp,sex,id\n1,M,s1\n2,M,s1\n3,M,s2\n5,W,s3\n6,W,s3\n7,W,s4\n8,W,s4",
        )
        with pytest.raises(DataError, match="s2"):
            read_long_csv(path, "resp ~ sex", "id", mode="manova-long")


class TestWide:
    def test_water_shape(self, tmp_path):
        path = write(
            tmp_path / "w.csv",
            "mortality,hardness,location\n"
            "1600,30,North\n1610,35,North\n1620,25,North\n"
            "1380,70,South\n1370,75,South",
        )
        data, layout = read_wide_csv(path, "cbind(mortality, hardness) ~ location")
        assert layout.a == 2 and layout.d == 2
        assert layout.response_names == ["mortality", "hardness"]
        assert data.n_subjects == 5

    def test_single_row_reaches_summarize_with_named_cell(self, tmp_path):
        from mvinfer.estimation import summarize

        path = write(tmp_path / "w.csv", "a,b,g\n1,2,x\n3,4,x\n5,6,y")
        data, layout = read_wide_csv(path, "cbind(a, b) ~ g")
        with pytest.raises(DataError, match="cell y"):
            summarize(data, layout)

    def test_cbind_order_controls_components(self, tmp_path):
        path = write(tmp_path / "w.csv", "a,b,g\n1,2,x\n3,4,x\n5,6,y\n7,8,y")
        data_ab, layout_ab = read_wide_csv(path, "cbind(a, b) ~ g")
        data_ba, layout_ba = read_wide_csv(path, "cbind(b, a) ~ g")
        np.testing.assert_array_equal(data_ab.values[:, 0], data_ba.values[:, 1])
        assert layout_ba.response_names == ["b", "a"]

    def test_subjects_numbered_by_row(self, tmp_path):
        path = write(tmp_path / "w.csv", "a,b,g\n1,2,x\n3,4,x\n5,6,y\n7,8,y")
        data, _ = read_wide_csv(path, "cbind(a, b) ~ g")
        assert data.subjects == ["1", "2", "3", "4"]

    def test_missing_value_names_columns(self, tmp_path):
        path = write(tmp_path / "w.csv", "a,b,g\n1,,x\n3,4,x\n5,6,y\n7,8,y")
        with pytest.raises(DataError, match="line 2"):
            read_wide_csv(path, "cbind(a, b) ~ g")


class TestHeaderless:
    def test_positional_columns(self, tmp_path):
        path = write(tmp_path / "n.csv", "1,1,s1\n2,2,s1\n3,1,s2\n4,2,s2")
        data, layout = read_long_csv(
            path, "V1 ~ V2", "V3", mode="rm",
            dialect=CsvDialect(header=False),
        )
        assert data.n_subjects == 2
        assert layout.sub_names == ["V2"]


class TestNested:
    def curdies_like(self, tmp_path, unique=True):
        lines = ["dug,season,site,subject"]
        sid = 0
        for season, sites in (("WINTER", ("1", "2", "3")), ("SUMMER", ("4", "5", "6"))):
            for site in sites:
                for _ in range(3):
                    sid += 1
                    lines.append(f"{sid * 0.1},{season},{site},{sid}")
                    lines.append(f"{sid * 0.2},{season},{site},{sid}")
        return write(tmp_path / "n.csv", "\n".join(lines))

    def test_unique_levels(self, tmp_path):
        path = self.curdies_like(tmp_path)
        data, layout = read_long_csv(
            path, "dug ~ season + season:site", "subject",
            mode="manova-long", nested_levels_unique=True,
        )
        assert layout.structure == "nested"
        assert layout.nested_counts == (2, 3)
        assert layout.cells == [
            ("SUMMER", "4"), ("SUMMER", "5"), ("SUMMER", "6"),
            ("WINTER", "1"), ("WINTER", "2"), ("WINTER", "3"),
        ]
        assert layout.d == 2

    def test_unique_levels_required_when_labels_repeat(self, tmp_path):
        lines = ["y,A,B,id"]
        sid = 0
        for a in ("a1", "a2"):
            for b in ("b1", "b2"):
                for _ in range(2):
                    sid += 1
                    lines.append(f"{sid},{a},{b},{sid}")
        path = write(tmp_path / "r.csv", "\n".join(lines))
        data, layout = read_long_csv(
            path, "y ~ A + A:B", "id", mode="manova-long", nested_levels_unique=False
        )
        assert layout.cells == [
            ("a1", "b1"), ("a1", "b2"), ("a2", "b1"), ("a2", "b2")
        ]

    def test_shared_label_mismatch_rejected(self, tmp_path):
        lines = ["y,A,B,id", "1,a1,b1,1", "2,a1,b2,2", "3,a2,b1,3", "4,a2,b3,4"]
        path = write(tmp_path / "r.csv", "\n".join(lines))
        with pytest.raises(DataError, match="nested"):
            read_long_csv(path, "y ~ A + A:B", "id", mode="manova-long")

    def test_duplicated_child_under_two_parents_with_unique_flag(self, tmp_path):
        lines = ["y,A,B,id", "1,a1,b1,1", "2,a1,b2,2", "3,a2,b1,3", "4,a2,b3,4"]
        path = write(tmp_path / "r.csv", "\n".join(lines))
        with pytest.raises(DataError, match="b1"):
            read_long_csv(
                path, "y ~ A + A:B", "id", mode="manova-long", nested_levels_unique=True
            )

    def test_unbalanced_nesting_rejected(self, tmp_path):
        lines = ["y,A,B,id", "1,a1,b1,1", "2,a1,b2,2", "3,a1,b3,3", "4,a2,b4,4", "5,a2,b5,5"]
        path = write(tmp_path / "u.csv", "\n".join(lines))
        with pytest.raises(DesignError, match="balanced"):
            read_long_csv(
                path, "y ~ A + A:B", "id", mode="manova-long", nested_levels_unique=True
            )
