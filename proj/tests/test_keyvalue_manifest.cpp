// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <string>

#include "mathrl/csv.hpp"
#include "mathrl/errors.hpp"
#include "mathrl/keyvalue.hpp"
#include "mathrl/manifest.hpp"
#include "test_util.hpp"

using namespace mathrl;

TEST_CASE("keyvalue parses comments, blanks, and padding") {
    const auto cfg = keyvalue::Config::parse_string(
        "# heading comment\n"
        "\n"
        "  alpha = 1  \n"
        "beta=2\n"
        "gamma = two words here\n"
        "   # indented comment\n",
        "inline");
    CHECK(cfg.get_int("alpha") == 1);
    CHECK(cfg.get_int("beta") == 2);
    CHECK(cfg.get_string("gamma") == "two words here");
    CHECK(cfg.contains("alpha"));
    CHECK_FALSE(cfg.contains("delta"));
}

TEST_CASE("keyvalue rejects malformed lines and duplicates") {
    CHECK_THROWS_AS((void)keyvalue::Config::parse_string("no equals sign\n", "x"),
                    ValidationError);
    CHECK_THROWS_AS((void)keyvalue::Config::parse_string("a = 1\na = 2\n", "x"),
                    ValidationError);
    try {
        (void)keyvalue::Config::parse_string("ok = 1\nbroken line\n", "conf");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        // Errors carry origin and 1-based line number.
        CHECK(std::string(e.what()).find("conf:2") != std::string::npos);
    }
}

TEST_CASE("keyvalue typed getters validate values") {
    const auto cfg = keyvalue::Config::parse_string(
        "n = 12\nx = 0.5\nflag = true\noff = false\nword = abc\n", "t");
    CHECK(cfg.get_int("n") == 12);
    CHECK(cfg.get_double("x") == doctest::Approx(0.5));
    CHECK(cfg.get_double("n") == doctest::Approx(12.0));
    CHECK(cfg.get_bool("flag"));
    CHECK_FALSE(cfg.get_bool("off"));
    CHECK_THROWS_AS((void)cfg.get_int("x"), ValidationError);
    CHECK_THROWS_AS((void)cfg.get_int("word"), ValidationError);
    CHECK_THROWS_AS((void)cfg.get_bool("word"), ValidationError);
    CHECK_THROWS_AS((void)cfg.get_string("missing"), ValidationError);
    CHECK(cfg.get_int_or("missing", 7) == 7);
    CHECK(cfg.get_double_or("missing", 1.5) == doctest::Approx(1.5));
    CHECK(cfg.get_bool_or("missing", true));
    CHECK(cfg.get_string_or("missing", "dflt") == "dflt");
}

TEST_CASE("keyvalue serialize round-trips and preserves insertion order") {
    keyvalue::Config cfg;
    cfg.set("zeta", "last first");
    cfg.set_int("count", -3);
    cfg.set_double("rate", 0.1);
    cfg.set_bool("on", true);
    cfg.set("zeta", "overwritten in place");

    const std::string text = cfg.serialize();
    // Insertion order, not alphabetical.
    CHECK(text.find("zeta") < text.find("count"));
    CHECK(text.find("count") < text.find("rate"));

    const auto back = keyvalue::Config::parse_string(text, "roundtrip");
    CHECK(back.get_string("zeta") == "overwritten in place");
    CHECK(back.get_int("count") == -3);
    CHECK(back.get_double("rate") == doctest::Approx(0.1));
    CHECK(back.get_bool("on"));
    CHECK(back.entries().size() == 4);
}

TEST_CASE("format_double emits shortest round-trip forms") {
    CHECK(keyvalue::format_double(1.0) == "1");
    CHECK(keyvalue::format_double(0.1) == "0.1");
    CHECK(keyvalue::format_double(-2.5) == "-2.5");
    // Parsing what was formatted recovers the exact double.
    const double value = 1.0 / 3.0;
    keyvalue::Config cfg;
    cfg.set_double("v", value);
    const auto back = keyvalue::Config::parse_string(cfg.serialize(), "x");
    CHECK(back.get_double("v") == value);
}

TEST_CASE("keyvalue file round-trip") {
    testutil::TempDir tmp;
    keyvalue::Config cfg;
    cfg.set("name", "value with spaces");
    cfg.set_int("n", 42);
    const auto path = tmp / "conf.cfg";
    cfg.write_file(path);
    const auto back = keyvalue::Config::parse_file(path);
    CHECK(back.get_string("name") == "value with spaces");
    CHECK(back.get_int("n") == 42);
    CHECK_THROWS_AS((void)keyvalue::Config::parse_file(tmp / "missing.cfg"), IoError);
}

TEST_CASE("fnv1a64 matches published vectors") {
    // Reference values for the 64-bit FNV-1a parameters.
    CHECK(manifest::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(manifest::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(manifest::fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(manifest::fnv1a64_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("manifest render is deterministic and complete") {
    manifest::RunManifest m;
    m.command = "curate";
    m.argv = {"mathrl", "curate", "--config", "c.cfg", "--out", "out"};
    m.seed = 7;
    m.tokenizer = "whitespace";
    m.effective_config.set_int("long_trace_threshold", 12800);

    const std::string a = manifest::render(m);
    const std::string b = manifest::render(m);
    CHECK(a == b);
    CHECK(a.find("\"curate\"") != std::string::npos);
    CHECK(a.find("long_trace_threshold") != std::string::npos);
    CHECK(a.find("whitespace") != std::string::npos);
    CHECK(a.find("config_hash") != std::string::npos);
    CHECK(a.back() == '\n');
    // No wall-clock leakage: rendering twice a second apart is identical, and
    // no timestamp-like keys appear.
    CHECK(a.find("time") == std::string::npos);
    CHECK(a.find("date") == std::string::npos);

    testutil::TempDir tmp;
    manifest::write(m, tmp.path());
    CHECK(testutil::read_file(tmp / "manifest.json") == a);
}

TEST_CASE("csv writer formats and rejects unescapable cells") {
    CHECK(csv::fixed9(1.0) == "1.000000000");
    CHECK(csv::fixed9(0.5) == "0.500000000");
    CHECK(csv::fixed9(-2.25) == "-2.250000000");

    testutil::TempDir tmp;
    const auto path = tmp / "t.csv";
    const std::vector<std::string> header = {"id", "note"};
    csv::write_file(path, header, {{"a", "plain"}, {"b", "second row"}});
    CHECK(testutil::read_file(path) == "id,note\na,plain\nb,second row\n");

    // This writer never quotes, so cells with separators are errors, not
    // silent corruption.
    const std::vector<std::string> id_only = {"id"};
    CHECK_THROWS_AS(csv::write_file(path, id_only, {{"with,comma"}}), ValidationError);
    CHECK_THROWS_AS(csv::write_file(path, id_only, {{"with\nnewline"}}), ValidationError);
}
