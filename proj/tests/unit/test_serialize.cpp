#include "doctest.h"

#include <filesystem>
#include <sstream>

#include "maya/harness.hpp"
#include "maya/serialize.hpp"

using namespace maya;

TEST_CASE("trace header and record format are exact") {
  PowerTrace tr;
  tr.header = {"abc123", 42, 20};
  TraceRecord a;
  a.t = 0;
  a.measured_w = 31.5;
  a.setting = {2.0, 0.0, 0.0};
  a.app_id = 3;
  a.run_id = 7;
  a.condition = Condition::Baseline;
  TraceRecord b = a;
  b.t = 1;
  b.target_w = 40.123456;
  b.measured_w = 39.99;
  b.setting = {1.6, 12.0, 30.0};
  b.condition = Condition::MayaGaussianSinusoid;
  tr.records = {a, b};
  CHECK(format_trace(tr) ==
        "# maya-trace v1; profile=abc123; seed=42; period_ms=20\n"
        "0,,31.5000,2.0000,0.0000,0.0000,3,7,Baseline\n"
        "1,40.1235,39.9900,1.6000,12.0000,30.0000,3,7,MayaGaussianSinusoid\n");
}

TEST_CASE("real traces round-trip byte-identically") {
  const auto p = MachineProfile::sys1();
  const auto b = design_loop(p, 2);
  const auto app = builtin_apps(p)[5];
  for (Condition c : {Condition::Baseline, Condition::NoisyBaseline, Condition::MayaGaussianSinusoid}) {
    std::optional<MaskProgram> mask;
    if (is_maya(c)) mask = make_mask(c, p, 4);
    const auto tr = run_once(app, c, p, is_maya(c) ? &b.controller : nullptr, mask, 4, 800, 2);
    const std::string text = format_trace(tr);
    const auto back = parse_trace(text);
    CHECK(format_trace(back) == text);
    CHECK(back.header.seed == 4);
    CHECK(back.header.profile_hash == p.hash());
    CHECK_NOTHROW(check_trace(back, p));
    std::ostringstream os;
    write_trace(os, back);
    std::istringstream is(os.str());
    CHECK(format_trace(read_trace(is)) == text);
  }
}

TEST_CASE("malformed traces are rejected") {
  const std::string header = "# maya-trace v1; profile=x; seed=1; period_ms=20\n";
  CHECK_THROWS_AS(parse_trace(""), Error);
  CHECK_THROWS_AS(parse_trace("# other\n"), Error);
  CHECK_THROWS_AS(parse_trace(header + "0,,1.0,2.0,0.0,0.0,0,0\n"), Error);
  CHECK_THROWS_AS(parse_trace(header + "0,,abc,2.0,0.0,0.0,0,0,Baseline\n"), Error);
  CHECK_THROWS_AS(parse_trace(header + "0,,1.0,2.0,0.0,0.0,0,0,Nope\n"), Error);
  const auto ok = parse_trace(header + "0,,1.0000,2.0000,0.0000,0.0000,0,0,Baseline\n");
  CHECK(ok.size() == 1);
  PowerTrace bad = ok;
  bad.records[0].target_w = 5.0;
  CHECK_THROWS_AS(check_trace(bad, MachineProfile::sys1()), Error);
  bad = ok;
  bad.records[0].setting.dvfs_ghz = 1.65;
  CHECK_THROWS_AS(check_trace(bad, MachineProfile::sys1()), Error);
}

TEST_CASE("condition names round-trip") {
  for (Condition c : all_conditions()) CHECK(parse_condition(to_string(c)) == c);
  CHECK(all_conditions().size() == 7);
  CHECK_THROWS_AS(parse_condition("Maya"), Error);
}

TEST_CASE("profile, workload, model, controller, mask ranges and nets round-trip through JSON") {
  const auto p = MachineProfile::sys2();
  CHECK(to_json(profile_from_json(to_json(p))).dump() == to_json(p).dump());
  CHECK(profile_from_json(to_json(p)).hash() == p.hash());
  CHECK(MachineProfile::sys1().hash() != p.hash());

  const auto suite = builtin_suite(p);
  CHECK(to_json(workloads_from_json(to_json(suite))).dump() == to_json(suite).dump());

  const auto b = design_loop(MachineProfile::sys1(), 3);
  const auto m = arx_from_json(to_json(b.model));
  CHECK(m.a == b.model.a);
  CHECK(m.b == b.model.b);
  CHECK(m.bias == b.model.bias);
  const auto c = controller_from_json(to_json(b.controller));
  CHECK(c.A == b.controller.A);
  CHECK(c.D == b.controller.D);
  CHECK(c.integrator_index == b.controller.integrator_index);
  CHECK(c.command_register == b.controller.command_register);

  MaskRanges r;
  r.amp_hi = 0.3;
  r.hold_max = 60;
  CHECK(to_json(mask_ranges_from_json(to_json(r))).dump() == to_json(r).dump());

  MlpD net({6, 4, 3}, 5);
  const auto back = mlp_from_json(to_json(net));
  CHECK(back.sizes() == net.sizes());
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    CHECK(back.weights[l] == net.weights[l]);
    CHECK(back.biases[l] == net.biases[l]);
  }
}

TEST_CASE("files and named profiles") {
  const auto dir = std::filesystem::temp_directory_path() / "maya_serialize_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "profile.json";
  write_json_file(path, to_json(MachineProfile::sys2()));
  CHECK(load_profile(path.string()).hash() == MachineProfile::sys2().hash());
  CHECK(load_profile("sys1").hash() == MachineProfile::sys1().hash());
  CHECK_THROWS_AS(load_profile((dir / "missing.json").string()), Error);
  write_text_file(dir / "bad.json", "{ not json");
  CHECK_THROWS_AS(read_json_file(dir / "bad.json"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("invalid profile JSON is rejected") {
  auto j = to_json(MachineProfile::sys1());
  j["tdp_w"] = -1.0;
  CHECK_THROWS_AS(profile_from_json(j), Error);
}
