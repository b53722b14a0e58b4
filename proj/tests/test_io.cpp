#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"

using namespace vortrack;

namespace {

TrajectoryData make_trajectory(std::size_t nt, std::size_t np, std::size_t nv, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_int_distribution<int> ex(-30, 30);
  TrajectoryData d;
  d.grid = {0.125, 1e-2, nt};
  d.provenance = Provenance::Noisy;
  d.seeds = {{"placement", 1}, {"noise", 18446744073709551615ull}};
  d.tracers = PointTable(nt, np);
  d.vortices = PointTable(nt, nv);
  for (auto& p : d.tracers.data()) p = {u(rng) * std::pow(10.0, ex(rng)), u(rng)};
  for (auto& p : d.vortices.data()) p = {u(rng), -u(rng) / 3.0};
  for (std::size_t v = 0; v < nv; ++v) d.circulations.push_back(u(rng) / 7.0);
  return d;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

std::string replace_line(std::string text, std::size_t line, const std::string& with) {
  std::size_t pos = 0;
  for (std::size_t i = 1; i < line; ++i) pos = text.find('\n', pos) + 1;
  const std::size_t end = text.find('\n', pos);
  return text.replace(pos, end - pos, with);
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::numeric_limits<double>::denorm_min(), -0.0}) {
    const std::string s = format_double(v);
    const double back = std::strtod(s.c_str(), nullptr);
    EXPECT_EQ(std::memcmp(&back, &v, sizeof v), 0) << s;
  }
  EXPECT_EQ(format_double(0.01), "0.01");
}

TEST(TrajectoryFile, RoundTripIsBitwise) {
  TrajectoryData d = make_trajectory(37, 5, 3, 1);
  d.boundaries = {0, 12, 24};
  const std::string text = format_trajectory(d);
  const TrajectoryData back = parse_trajectory(text, "mem");
  EXPECT_TRUE(back == d);
  EXPECT_EQ(format_trajectory(back), text);
}

TEST(TrajectoryFile, TracerOnlyAndVortexOnly) {
  TrajectoryData t = make_trajectory(10, 3, 0, 2);
  t.circulations.clear();
  EXPECT_TRUE(parse_trajectory(format_trajectory(t), "t") == t);
  TrajectoryData v = make_trajectory(10, 0, 2, 3);
  v.provenance = Provenance::Reconstructed;
  EXPECT_TRUE(parse_trajectory(format_trajectory(v), "v") == v);
}

TEST(TrajectoryFile, RowsOrderedByTimeKindId) {
  TrajectoryData d = make_trajectory(2, 2, 2, 4);
  const std::string text = format_trajectory(d);
  const auto body = text.substr(text.find("time,kind,id,x,y\n") + 17);
  std::vector<std::string> prefixes;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const std::size_t end = body.find('\n', pos);
    const std::string line = body.substr(pos, end - pos);
    prefixes.push_back(line.substr(0, line.find(',', line.find(',', line.find(',') + 1) + 1)));
    pos = end + 1;
  }
  const std::vector<std::string> expect{"0.125,tracer,0", "0.125,tracer,1", "0.125,vortex,0", "0.125,vortex,1",
                                        "0.135,tracer,0", "0.135,tracer,1", "0.135,vortex,0", "0.135,vortex,1"};
  EXPECT_EQ(prefixes, expect);
}

TEST(TrajectoryFile, WriteReadThroughDisk) {
  const std::string dir = vt_test::temp_dir("io_disk");
  const TrajectoryData d = make_trajectory(20, 4, 2, 5);
  write_trajectory(join_path(dir, "nested/t.csv"), d);
  EXPECT_TRUE(read_trajectory(join_path(dir, "nested/t.csv")) == d);
  EXPECT_EQ(code_of([&] { read_trajectory(join_path(dir, "missing.csv")); }), ErrorCode::IoError);
}

TEST(TrajectoryFile, SchemaErrorsNameTheLine) {
  const std::string good = format_trajectory(make_trajectory(3, 2, 1, 6));
  // Header: magic, grid, provenance, seeds, circulations, columns; rows start on line 7.
  try {
    parse_trajectory(replace_line(good, 9, "0.125,tracer,0,abc,1"), "f.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
    EXPECT_NE(e.message().find("f.csv:9:"), std::string::npos) << e.message();
  }
}

TEST(TrajectoryFile, SchemaViolations) {
  const std::string good = format_trajectory(make_trajectory(3, 2, 1, 7));
  auto bad = [&](const std::string& text) { return code_of([&] { parse_trajectory(text, "f"); }); };
  EXPECT_EQ(bad(replace_line(good, 1, "# vortrack-trajectory 2")), ErrorCode::SchemaError);
  EXPECT_EQ(bad(replace_line(good, 1, "# something-else 1")), ErrorCode::SchemaError);
  EXPECT_EQ(bad(replace_line(good, 3, "# provenance cooked")), ErrorCode::SchemaError);
  EXPECT_EQ(bad(replace_line(good, 6, "time,kind,id,y,x")), ErrorCode::SchemaError);
  EXPECT_EQ(bad(replace_line(good, 7, "0.1251,tracer,0,1,1")), ErrorCode::SchemaError);  // off grid
  EXPECT_EQ(bad(replace_line(good, 7, "0.125,tracer,1,1,1")), ErrorCode::SchemaError);   // id order
  EXPECT_EQ(bad(replace_line(good, 7, "0.125,ghost,0,1,1")), ErrorCode::SchemaError);
  EXPECT_EQ(bad(replace_line(good, 7, "0.125,tracer,0,1")), ErrorCode::SchemaError);
  EXPECT_EQ(bad(good.substr(0, good.rfind('\n', good.size() - 2) + 1)), ErrorCode::SchemaError);  // missing row
  EXPECT_EQ(bad(replace_line(good, 2, "# grid t0=0.125 h=0.01 nt=4")), ErrorCode::SchemaError);
}

TEST(VelocityFile, RoundTripIsBitwise) {
  const TrajectoryData t = make_trajectory(12, 3, 0, 8);
  const VelocityData v{t.grid, Provenance::Smoothed, t.tracers};
  const std::string text = format_velocity(v);
  EXPECT_NE(text.find("time,kind,id,vx,vy"), std::string::npos);
  EXPECT_TRUE(parse_velocity(text, "v") == v);
  EXPECT_EQ(code_of([&] { parse_trajectory(text, "v"); }), ErrorCode::SchemaError);
}

TEST(Columns, WritesHeaderAndRows) {
  const std::string dir = vt_test::temp_dir("io_columns");
  write_columns(join_path(dir, "c.csv"), {"a", "b"}, {{1.0, 0.5}, {2.0, -3.0}});
  EXPECT_EQ(detail::read_file(join_path(dir, "c.csv")), "a,b\n1,2\n0.5,-3\n");
  EXPECT_EQ(code_of([&] { write_columns(join_path(dir, "d.csv"), {"a", "b"}, {{1.0}, {2.0, 3.0}}); }),
            ErrorCode::ShapeMismatch);
}

TEST(Json, ParseErrorIsSchemaError) {
  const std::string dir = vt_test::temp_dir("io_json");
  detail::write_file(join_path(dir, "x.json"), "{ nope");
  EXPECT_EQ(code_of([&] { read_json(join_path(dir, "x.json")); }), ErrorCode::SchemaError);
}

TEST(Config, RoundTrip) {
  ExperimentConfig c;
  c.vortices = vt_test::reference();
  c.tracers.box = Box{{-3, -2}, {3, 4}};
  c.initial_guess = vt_test::reference();
  c.tau = 12.5;
  c.solver.aggregator = Aggregator::Mean;
  c.solver.tracking.mode = Tracking::Direct;
  c.noise.seed = 99;
  const Json j = config_to_json(c);
  const ExperimentConfig back = config_from_json(j);
  EXPECT_EQ(config_to_json(back), j);
  EXPECT_EQ(back.tracers.box, c.tracers.box);
  EXPECT_EQ(back.solver.aggregator, Aggregator::Mean);
  EXPECT_EQ(back.solver.tracking.mode, Tracking::Direct);
  EXPECT_EQ(*back.tau, 12.5);
}

TEST(Config, DefaultsFillMissingSections) {
  const auto c = config_from_json(Json::parse(R"({"vortices": {"circulations": [1.5], "positions": [[0, 1]]}})"));
  EXPECT_EQ(c.tracers.count, 20u);
  EXPECT_EQ(c.grid.h, 1e-2);
  EXPECT_EQ(c.solver.epsilon, 0.1);
  EXPECT_EQ(c.reconstruction.alpha, 0.2);
  EXPECT_FALSE(c.initial_guess.has_value());
  EXPECT_EQ(code_of([&] { (void)c.guess(); }), ErrorCode::InvalidArgument);
}

TEST(Config, SchemaViolations) {
  auto bad = [](const char* text) { return code_of([&] { config_from_json(Json::parse(text)); }); };
  EXPECT_EQ(bad(R"({})"), ErrorCode::SchemaError);
  EXPECT_EQ(bad(R"({"vortices": {"circulations": [1], "positions": [[0, 1]]}, "nosie": {}})"), ErrorCode::SchemaError);
  EXPECT_EQ(bad(R"({"vortices": {"circulations": [1, 2], "positions": [[0, 1]]}})"), ErrorCode::SchemaError);
  EXPECT_EQ(bad(R"({"vortices": {"circulations": [1], "positions": [[0]]}})"), ErrorCode::SchemaError);
  EXPECT_EQ(bad(R"({"vortices": {"circulations": [1], "positions": [[0, 1]]}, "grid": {"h": "x"}})"),
            ErrorCode::SchemaError);
  EXPECT_EQ(bad(R"({"vortices": {"circulations": [1], "positions": [[0, 1]]}, "grid": {"h": -1}})"),
            ErrorCode::SchemaError);
  EXPECT_EQ(bad(R"({"vortices": {"circulations": [0], "positions": [[0, 1]]}})"), ErrorCode::SchemaError);
}

TEST(ShippedConfigs, Parse) {
  for (const char* name : {"reference.json", "reference_clean.json", "reference_short.json"}) {
    const auto c = read_config(std::string(VORTRACK_SOURCE_DIR) + "/configs/" + name);
    EXPECT_EQ(c.vortices.size(), 4u) << name;
    EXPECT_EQ(c.tracers.count, 20u) << name;
    EXPECT_TRUE(c.initial_guess.has_value()) << name;
  }
}

TEST(PlaceTracers, DeterministicBoxedAndClear) {
  const VortexSystem vs = vt_test::reference();
  TracerConfig cfg;
  cfg.clearance = 0.3;
  const auto a = place_tracers(vs, cfg), b = place_tracers(vs, cfg);
  ASSERT_EQ(a.size(), 20u);
  EXPECT_EQ(a.positions, b.positions);
  for (const auto& p : a.positions) {
    EXPECT_GE(p.x, -2.0);
    EXPECT_LE(p.x, 2.0);
    EXPECT_GE(p.y, -1.0);
    EXPECT_LE(p.y, 3.0);
    for (const auto& z : vs.positions) EXPECT_GE(norm(p - z), 0.3);
  }
  cfg.seed = 2;
  EXPECT_NE(place_tracers(vs, cfg).positions, a.positions);
}

TEST(PlaceTracers, SingleVortexBoxIsWidened) {
  TracerConfig cfg;
  cfg.count = 50;
  const auto ts = place_tracers(VortexSystem{{1.0}, {{3, -1}}}, cfg);
  for (const auto& p : ts.positions) {
    EXPECT_LE(std::abs(p.x - 3), 1.0);
    EXPECT_LE(std::abs(p.y + 1), 1.0);
  }
}

TEST(PlaceTracers, ImpossibleClearance) {
  TracerConfig cfg;
  cfg.clearance = 100.0;
  EXPECT_EQ(code_of([&] { place_tracers(vt_test::reference(), cfg); }), ErrorCode::InvalidArgument);
}
