#include <gtest/gtest.h>

#include "oracles.hpp"

#include <sstream>

using namespace afcnet;

namespace {

TEST(TagFile, RoundTripIsBitExact) {
  std::vector<TimeTag> tags{{0, kNoPair, 1, Origin::pair},
                            {5, kNoPair, 2, Origin::unknown},
                            {5, kNoPair, 2, Origin::dark},
                            {9'000'000'000'000'000'000, kNoPair, 65535, Origin::leak}};
  std::ostringstream first;
  write_tags(first, tags);
  std::istringstream in(first.str());
  const auto back = read_tags(in);
  EXPECT_EQ(back, tags);
  std::ostringstream second;
  write_tags(second, back);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(first.str().substr(0, first.str().find('\n')), "# channel\ttime_ps\torigin");
  EXPECT_NE(first.str().find("\n2\t5\n"), std::string::npos);
}

TEST(TagFile, SimulatedStreamRoundTrip) {
  Scenario s = preset("spool-10km");
  s.duration = kSecond / 2;
  const TagStreams st = simulate_streams(s, 3, s.duration);
  std::ostringstream out;
  write_tags(out, st.signal);
  std::istringstream in(out.str());
  const auto back = read_tags(in);
  ASSERT_EQ(back.size(), st.signal.size());
  EXPECT_EQ(back, st.signal);
}

TEST(TagFile, RejectsMalformedInput) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_tags(in);
  };
  EXPECT_THROW(parse("1\t2\n"), FormatError);
  EXPECT_THROW(parse("# channel\ttime_ps\torigin\n1\tx\n"), FormatError);
  EXPECT_THROW(parse("# channel\ttime_ps\torigin\n1\t5\tghost\n"), FormatError);
  EXPECT_THROW(parse("# channel\ttime_ps\torigin\n1\t5\n1\t4\n"), FormatError);
  EXPECT_THROW(parse("# channel\ttime_ps\torigin\n1\t5\tpair\textra\n"), FormatError);
  EXPECT_TRUE(parse("# channel\ttime_ps\torigin\n").empty());
}

TEST(HistogramCsv, RoundTrip) {
  Histogram h;
  h.bin_width = 400'000;
  h.origin = -1'200'000;
  h.counts = {3, 0, 17, 4};
  std::ostringstream out;
  write_histogram_csv(out, h);
  EXPECT_EQ(out.str().substr(0, 19), "bin_start_ps,count\n");
  std::istringstream in(out.str());
  EXPECT_EQ(read_histogram_csv(in), h);
}

TEST(Records, DuplicatesAndComments) {
  std::istringstream ok("# comment\n a = 1 \n\nb=two words\n");
  const auto r = read_records(ok);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].key, "a");
  EXPECT_EQ(r[1].value, "two words");
  std::istringstream dup("a = 1\na = 2\n");
  EXPECT_THROW(read_records(dup), FormatError);
  std::istringstream bad("just words\n");
  EXPECT_THROW(read_records(bad), FormatError);
}

TEST(ScenarioConfig, RoundTripEveryPreset) {
  for (const auto& name : preset_names()) {
    Scenario s = preset(name);
    s.franson.enabled = true;
    s.seed = 987654321987654321ULL;
    std::ostringstream out;
    write_scenario(out, s);
    std::istringstream in(out.str());
    const Scenario back = apply_config(Scenario{}, in);
    EXPECT_EQ(scenario_records(back), scenario_records(s)) << name;
  }
}

TEST(ScenarioConfig, OverridesApply) {
  const Scenario s = apply_config_text(preset("metro-50km"),
                                       "idler_channel.loss_db = 20\nseed = 5\nfranson.signal_phases = 0, 1.5\n");
  EXPECT_DOUBLE_EQ(s.idler_channel.loss_db, 20.0);
  EXPECT_EQ(s.seed, 5u);
  EXPECT_EQ(s.franson.signal_phases, (std::vector<double>{0.0, 1.5}));
}

TEST(ScenarioConfig, UnknownAndMalformedKeysAreReportedTogether) {
  try {
    apply_config_text(preset("local-0km"), "source.pair_rate = 5\nsource.coupling_idler = lots\npump.mode = sometimes\n");
    FAIL();
  } catch (const ConfigError& e) {
    ASSERT_EQ(e.problems().size(), 3u);
    EXPECT_NE(e.problems()[0].find("unknown key 'source.pair_rate'"), std::string::npos);
    EXPECT_NE(e.problems()[1].find("source.coupling_idler"), std::string::npos);
    EXPECT_NE(e.problems()[2].find("pump.mode"), std::string::npos);
  }
}

TEST(ScenarioConfig, InvariantViolationsNameTheField) {
  try {
    apply_config_text(preset("metro-50km"), "afc.comb_spacing_hz = 40000\n");
    FAIL();
  } catch (const ConfigError& e) {
    bool pump = false;
    for (const auto& p : e.problems()) pump |= p.rfind("pump.period_ps", 0) == 0;
    EXPECT_TRUE(pump) << e.what();
  }
  const Scenario ok = apply_config_text(preset("metro-50km"),
                                        "afc.comb_spacing_hz = 40000\npump.period_ps = 50000000\npump.on_ps = 25000000\n"
                                        "tdc.period_ps = 50000000\ntdc.on_ps = 25000000\n");
  EXPECT_EQ(ok.afc.storage_time(), 25 * kMicrosecond);
}

}  // namespace
