"""File loaders, serializers, and run configuration."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gvccarbon import ingest, synthetic
from gvccarbon.errors import (
    BalanceError,
    ConfigError,
    DuplicateKey,
    MissingRow,
    NegativeEmission,
    SchemaError,
    UnknownVariableName,
)
from gvccarbon.mrio import build_coefficients


TOY_ICIO = """#countries: AAA,BBB
#industries: MFG
#year: 2005
row,AAA:MFG,BBB:MFG,FD:AAA,FD:BBB,OUT
AAA:MFG,20,30,45,5,100
BBB:MFG,10,40,10,40,100
"""


@pytest.fixture
def toy_icio(tmp_path):
    path = tmp_path / "icio_2005.csv"
    path.write_text(TOY_ICIO, encoding="utf-8")
    return path


class TestLoadIcio:
    def test_minimal_schema(self, toy_icio):
        table = ingest.load_icio(toy_icio)
        assert table.countries == ("AAA", "BBB")
        assert table.industries == ("MFG",)
        assert table.year == 2005
        assert_allclose(table.Z, [[20.0, 30.0], [10.0, 40.0]])
        assert_allclose(table.F, [[45.0, 5.0], [10.0, 40.0]])
        assert_allclose(table.x, [100.0, 100.0])

    def test_balance_violation_names_row(self, tmp_path):
        bad = TOY_ICIO.replace("AAA:MFG,20,30,45,5,100",
                               "AAA:MFG,20,30,45,5,101")
        path = tmp_path / "bad.csv"
        path.write_text(bad, encoding="utf-8")
        with pytest.raises(BalanceError, match="AAA:MFG"):
            ingest.load_icio(path)

    def test_column_count_mismatch(self, tmp_path):
        bad = TOY_ICIO.replace("AAA:MFG,20,30,45,5,100", "AAA:MFG,20,30,45,5")
        path = tmp_path / "bad.csv"
        path.write_text(bad, encoding="utf-8")
        with pytest.raises(SchemaError, match="columns"):
            ingest.load_icio(path)

    def test_locale_independent_numbers(self, tmp_path):
        bad = TOY_ICIO.replace("AAA:MFG,20,30,45,5,100",
                               'AAA:MFG,"1,234",30,45,5,100')
        path = tmp_path / "bad.csv"
        path.write_text(bad, encoding="utf-8")
        with pytest.raises(SchemaError, match="cannot parse"):
            ingest.load_icio(path)

    def test_round_trip_through_coefficients(self, toy_icio):
        table = ingest.load_icio(toy_icio)
        model = build_coefficients(table)
        assert_allclose(model.A, [[0.2, 0.3], [0.1, 0.4]])

    def test_load_save_load_byte_stable(self, tmp_path, toy_icio):
        table = ingest.load_icio(toy_icio)
        first = tmp_path / "first.csv"
        ingest.save_icio(table, first)
        second = tmp_path / "second.csv"
        ingest.save_icio(ingest.load_icio(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_random_table_survives_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        table = synthetic.random_icio(rng, ("A", "B", "C"), ("M", "S"),
                                      year=1999)
        path = tmp_path / "t.csv"
        ingest.save_icio(table, path)
        loaded = ingest.load_icio(path)
        assert_allclose(loaded.Z, table.Z, rtol=0, atol=0)
        assert_allclose(loaded.x, table.x, rtol=0, atol=0)
        assert loaded.year == 1999


class TestEmissions:
    def write(self, tmp_path, body):
        path = tmp_path / "emissions.csv"
        path.write_text("country,industry,tonnes\n" + body, encoding="utf-8")
        return path

    def test_all_zero(self, tmp_path, toy_icio):
        table = ingest.load_icio(toy_icio)
        path = self.write(tmp_path, "AAA,MFG,0\nBBB,MFG,0\n")
        e = ingest.load_emissions_vector(path, table)
        assert_allclose(e.e, [0.0, 0.0])

    def test_intensity_division(self, tmp_path, toy_icio):
        table = ingest.load_icio(toy_icio)
        path = self.write(tmp_path, "AAA,MFG,10\nBBB,MFG,25\n")
        e = ingest.load_emissions_vector(path, table)
        assert_allclose(e.e, [0.1, 0.25])

    def test_shuffled_keys_identical(self, tmp_path, toy_icio):
        table = ingest.load_icio(toy_icio)
        ordered = self.write(tmp_path, "AAA,MFG,10\nBBB,MFG,25\n")
        e1 = ingest.load_emissions_vector(ordered, table)
        shuffled = tmp_path / "shuffled.csv"
        shuffled.write_text(
            "country,industry,tonnes\nBBB,MFG,25\nAAA,MFG,10\n",
            encoding="utf-8")
        e2 = ingest.load_emissions_vector(shuffled, table)
        assert_allclose(e1.e, e2.e, rtol=0, atol=0)

    def test_missing_row(self, tmp_path, toy_icio):
        table = ingest.load_icio(toy_icio)
        path = self.write(tmp_path, "AAA,MFG,10\n")
        with pytest.raises(MissingRow):
            ingest.load_emissions_vector(path, table)

    def test_negative_emission(self, tmp_path, toy_icio):
        table = ingest.load_icio(toy_icio)
        path = self.write(tmp_path, "AAA,MFG,-1\nBBB,MFG,2\n")
        with pytest.raises(NegativeEmission):
            ingest.load_emissions_vector(path, table)

    def test_duplicate_record(self, tmp_path, toy_icio):
        table = ingest.load_icio(toy_icio)
        path = self.write(tmp_path, "AAA,MFG,1\nAAA,MFG,2\nBBB,MFG,3\n")
        with pytest.raises(DuplicateKey):
            ingest.load_emissions_vector(path, table)


class TestIndicators:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "ind.csv"
        path.write_text("country,year,variable,value,unit\n", encoding="utf-8")
        panel = ingest.load_indicator_panel(path)
        assert panel.records == ()

    def test_duplicate_key(self, tmp_path):
        path = tmp_path / "ind.csv"
        path.write_text(
            "country,year,variable,value,unit\n"
            "IND,2005,GDP,700,usd\nIND,2005,GDP,800,usd\n",
            encoding="utf-8")
        with pytest.raises(DuplicateKey):
            ingest.load_indicator_panel(path)

    def test_unknown_variable_name(self, tmp_path):
        path = tmp_path / "ind.csv"
        path.write_text(
            "country,year,variable,value,unit\nIND,2005,WIDGETS,3,ct\n",
            encoding="utf-8")
        with pytest.raises(UnknownVariableName):
            ingest.load_indicator_panel(path)
        panel = ingest.load_indicator_panel(path, passthrough=True)
        assert panel.variable_names() == ("WIDGETS",)

    def test_alias_normalization(self, tmp_path):
        path = tmp_path / "ind.csv"
        path.write_text(
            "country,year,variable,value,unit\nIND,2005,str,1.5,index\n",
            encoding="utf-8")
        panel = ingest.load_indicator_panel(path)
        assert panel.value("IND", 2005, "ESI") == 1.5

    def test_year_must_be_integer(self, tmp_path):
        path = tmp_path / "ind.csv"
        path.write_text(
            "country,year,variable,value,unit\nIND,2005.0,GDP,700,usd\n",
            encoding="utf-8")
        with pytest.raises(SchemaError, match="integer"):
            ingest.load_indicator_panel(path)

    def test_counting_oracle(self, tmp_path):
        # 16 countries x 24 years x 7 variables = 2688 records.
        rows = ["country,year,variable,value,unit"]
        variables = ("GDP", "MFG", "ESI", "TO", "FOR_COVER",
                     "REN_ENERGY_CONS", "POP_DENSITY")
        for c in range(16):
            for y in range(1995, 2019):
                for v in variables:
                    rows.append(f"C{c:02d},{y},{v},1.5,u")
        path = tmp_path / "ind.csv"
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        panel = ingest.load_indicator_panel(path)
        assert len(panel.records) == 2688
        assert len(panel.countries()) == 16 and len(panel.years()) == 24

    def test_round_trip(self, tmp_path):
        records = (("IND", 2005, "GDP", 712.5, "usd"),
                   ("CHN", 2006, "TO", 45.0, "pct"))
        panel = ingest.IndicatorPanel(records)
        path = tmp_path / "a.csv"
        ingest.save_indicator_panel(panel, path)
        again = tmp_path / "b.csv"
        ingest.save_indicator_panel(ingest.load_indicator_panel(path), again)
        assert path.read_bytes() == again.read_bytes()


CONFIG_TEXT = """[data]
dir = .
years = 2000-2002

[sample]
countries = AAA,BBB
oecd = AAA

[variables]
manufacturing = MFG
log_base = 10

[estimation]
fgls_scheme = ar1
instrument = lagged-level

[output]
dir = results
"""


class TestConfig:
    def test_parses_and_partitions(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(CONFIG_TEXT, encoding="utf-8")
        config = ingest.load_config(path)
        assert config.years == (2000, 2001, 2002)
        assert config.sample == ("AAA", "BBB")
        assert config.oecd == ("AAA",) and config.non_oecd == ("BBB",)
        assert config.fgls_scheme == "ar1"
        assert config.icio_path(2000).name == "icio_2000.csv"

    def test_oecd_outside_sample_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(CONFIG_TEXT.replace("oecd = AAA", "oecd = CCC"),
                        encoding="utf-8")
        with pytest.raises(ConfigError, match="outside the sample"):
            ingest.load_config(path)

    def test_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(CONFIG_TEXT, encoding="utf-8")
        config = ingest.load_config(path, data_dir=tmp_path / "elsewhere",
                                    output_dir=tmp_path / "o", log_base="e")
        assert config.data_dir == tmp_path / "elsewhere"
        assert abs(config.log_base - np.e) < 1e-12

    def test_env_var_fallback(self, tmp_path, monkeypatch):
        text = CONFIG_TEXT.replace("dir = .\n", "")
        path = tmp_path / "run.cfg"
        path.write_text(text, encoding="utf-8")
        monkeypatch.setenv(ingest.DATA_DIR_ENV, str(tmp_path / "envdata"))
        config = ingest.load_config(path)
        assert config.data_dir == tmp_path / "envdata"

    def test_year_list_form(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(CONFIG_TEXT.replace("2000-2002", "1995,1997"),
                        encoding="utf-8")
        assert ingest.load_config(path).years == (1995, 1997)

    def test_check_sample(self, tmp_path, toy_icio):
        path = tmp_path / "run.cfg"
        path.write_text(CONFIG_TEXT, encoding="utf-8")
        config = ingest.load_config(path)
        table = ingest.load_icio(toy_icio)
        ingest.check_sample(config, table)

        bad_path = tmp_path / "bad.cfg"
        bad_path.write_text(CONFIG_TEXT.replace("AAA,BBB", "AAA,XXX"),
                            encoding="utf-8")
        bad = ingest.load_config(bad_path)
        with pytest.raises(ConfigError, match="missing from"):
            ingest.check_sample(bad, table)


class TestDemoDataset:
    def test_demo_is_deterministic_and_loadable(self, tmp_path):
        cfg1 = synthetic.write_demo_dataset(tmp_path / "one", seed=0)
        cfg2 = synthetic.write_demo_dataset(tmp_path / "two", seed=0)
        year = synthetic.DEMO_YEARS[0]
        a = (tmp_path / "one" / f"icio_{year}.csv").read_bytes()
        b = (tmp_path / "two" / f"icio_{year}.csv").read_bytes()
        assert a == b

        config = ingest.load_config(cfg1)
        assert len(config.years) == 24
        assert len(config.sample) == 16
        table = ingest.load_icio(config.icio_path(year))
        assert table.countries == synthetic.DEMO_SAMPLE + ("ROW",)
        e = ingest.load_emissions_vector(config.emissions_path(year), table)
        assert e.e.min() >= 0
        indicators = ingest.load_indicator_panel(config.indicators_path)
        assert len(indicators.records) == 16 * 24 * 7
