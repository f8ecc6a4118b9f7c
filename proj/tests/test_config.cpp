#include <doctest.h>

#include <sstream>
#include <string>

#include "twisim/config.hpp"
#include "twisim/errors.hpp"

using namespace twisim;

namespace {

const char* kFullConfig = R"(# fig-style scenario
t0_s = 0
v = 3e8
d_max_m = 100
sensors = 2
c_min_ms = 10     # milliseconds convert on load
c_max_ms = 500
t_f_ms = 10
m_max = 9
n_max = 7
preamble_length = 4
gamma_th = 1
sensor.2.gamma = 4
)";

} // namespace

TEST_CASE("parse a full config with unit conversion") {
    const auto cfg = parse_config_text(kFullConfig, "cfg.txt");
    CHECK(cfg.scenario.t0 == 0.0);
    CHECK(cfg.scenario.v == 3e8);
    CHECK(cfg.scenario.d_max == 100.0);
    CHECK(cfg.scenario.sensor_count == 2);
    CHECK(cfg.scenario.c_min == doctest::Approx(0.010));
    CHECK(cfg.scenario.c_max == doctest::Approx(0.500));
    CHECK(cfg.comm.frame_s == doctest::Approx(0.010));
    CHECK(cfg.comm.max_sr_attempts == 9);
    CHECK(cfg.comm.max_pt_attempts == 7);
    CHECK(*cfg.comm.gamma_th_override == 1.0);
    REQUIRE(cfg.sensors.size() == 2);
    CHECK(*cfg.sensors[1].gamma_override == 4.0);
    // sensor 1 inherits sensor 2's SNR when left unspecified
    CHECK(*cfg.sensors[0].gamma_override == 4.0);
}

TEST_CASE("wildcard sensor keys apply to all, specific keys win") {
    const std::string text = "sensors = 3\nc_min_s = 0\nc_max_s = 0.1\n"
                             "t_f_ms = 10\ngamma_th = 1\npreamble_length = 4\n"
                             "sensor.*.gamma = 2\nsensor.3.gamma = 8\n"
                             "sensor.1.perfect_detection = true\n";
    const auto cfg = parse_config_text(text, "cfg.txt");
    CHECK(*cfg.sensors[0].gamma_override == 2.0);
    CHECK(*cfg.sensors[1].gamma_override == 2.0);
    CHECK(*cfg.sensors[2].gamma_override == 8.0);
    CHECK(cfg.sensors[0].perfect_detection);
    CHECK(!cfg.sensors[1].perfect_detection);
}

TEST_CASE("unknown key is rejected with its line number") {
    const std::string text = "t_f_ms = 10\ngamma_th = 1\nbogus_key = 3\n"
                             "c_min_s = 0\nc_max_s = 1\n";
    try {
        parse_config_text(text, "cfg.txt");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("cfg.txt:3") != std::string::npos);
        CHECK(msg.find("bogus_key") != std::string::npos);
    }
}

TEST_CASE("malformed lines carry their line numbers") {
    try {
        parse_config_text("t_f_ms = 10\njust words\n", "cfg.txt");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cfg.txt:2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("t_f_ms = 10\nt_f_ms = 20\n", "c"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("t_f_s = 0.01\nt_f_ms = 10\n", "c"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("v = fast\n", "c"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("sensor.0.gamma = 1\n", "c"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("sensor.9.gamma = 1\nc_min_s=0\nc_max_s=1\n"
                                      "t_f_ms=10\ngamma_th=1\n",
                                      "c"),
                    ConfigError);
}

TEST_CASE("equal computation bounds require the explicit flag") {
    const std::string base = "t_f_ms = 10\ngamma_th = 1\nc_min_ms = 5\nc_max_ms = 5\n";
    CHECK_THROWS_AS(parse_config_text(base, "c"), ConfigError);
    const auto cfg =
        parse_config_text(base + "allow_equal_comp_bounds = true\n", "c");
    CHECK(cfg.scenario.allow_equal_comp_bounds);
}

TEST_CASE("echo round-trips to an identical configuration") {
    const auto cfg = parse_config_text(kFullConfig, "cfg.txt");
    std::ostringstream echo1;
    echo_resolved_config(echo1, cfg);

    const auto reparsed = parse_config_text(echo1.str(), "echo.txt");
    std::ostringstream echo2;
    echo_resolved_config(echo2, reparsed);
    CHECK(echo1.str() == echo2.str());

    CHECK(reparsed.scenario.c_min == cfg.scenario.c_min);
    CHECK(reparsed.scenario.c_max == cfg.scenario.c_max);
    CHECK(reparsed.comm.frame_s == cfg.comm.frame_s);
    CHECK(*reparsed.sensors[0].gamma_override == *cfg.sensors[0].gamma_override);
}

TEST_CASE("physics keys survive the echo") {
    const std::string text = "t_f_ms = 10\nbandwidth_hz = 1e6\nt_p_ms = 1\n"
                             "packet_bits = 1000\nn0 = 4e-21\n"
                             "c_min_s = 0\nc_max_s = 0.1\nserialize_grants = true\n"
                             "sensor.*.power_w = 0.2\nsensor.*.beta = 1e-8\n";
    const auto cfg = parse_config_text(text, "cfg.txt");
    CHECK(cfg.sim_flags.serialize_grants);
    std::ostringstream echo;
    echo_resolved_config(echo, cfg);
    const auto reparsed = parse_config_text(echo.str(), "echo.txt");
    CHECK(*reparsed.comm.bandwidth_hz == 1e6);
    CHECK(*reparsed.comm.pt_subframe_s == doctest::Approx(1e-3));
    CHECK(*reparsed.sensors[0].tx_power_w == 0.2);
    CHECK(reparsed.sim_flags.serialize_grants);
}
