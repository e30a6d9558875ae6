import pytest

from nmps.explorer import ExplorerKind
from nmps.replay import Sharing
from nmps.variants import BASELINES, VARIANT_NAMES, ActionSource, VariantConfig, VariantParseError, parse_variant


class TestParse:
    def test_twelve_names(self):
        assert len(VARIANT_NAMES) == 12 and len(set(VARIANT_NAMES)) == 12
        assert BASELINES == ("APS", "DIAYN")

    @pytest.mark.parametrize("name", VARIANT_NAMES)
    def test_round_trip(self, name):
        assert parse_variant(name).render() == name

    def test_fields(self):
        v = parse_variant("NMPS_X_exploit^e*")
        assert v.explorer_reward is ExplorerKind.APS
        assert v.buffer_sharing is Sharing.EXPLOIT_COMMON
        assert not v.explorer_feature_trainable
        assert v.action_source is ActionSource.HOMEO
        assert v.skill_dim is None

    def test_diayn_dimensions(self):
        assert parse_variant("NMPS_D_sep^ex").skill_dim == 16
        assert parse_variant("NMPS_D_sep^ex_D").action_source is ActionSource.ALWAYS_EXPLORER
        a10 = parse_variant("NMPS_D_sep^e*_D_A10")
        assert (a10.feature_dim, a10.skill_dim) == (10, 10)

    def test_latex_spelling(self):
        assert parse_variant(r"NMPS\_X\_sep^{ex}").name == "NMPS_X_sep^ex"
        assert parse_variant(r"$NMPS\_D\_sep^{e*}\_D$").name == "NMPS_D_sep^e*_D"

    @pytest.mark.parametrize("bad", ["NMPS_X_sep^ex_D", "NMPS_Q_sep^ex", "NMPS_D_exploit^ex_D",
                                     "NMPS_X_sep^ex_A10", "APS", ""])
    def test_rejects_names_outside_the_table(self, bad):
        with pytest.raises(VariantParseError, match="valid names"):
            parse_variant(bad)

    def test_always_explorer_requires_diayn(self):
        with pytest.raises(ValueError):
            VariantConfig(ExplorerKind.APS, Sharing.SEPARATE, True, ActionSource.ALWAYS_EXPLORER, 10, None, "x")
