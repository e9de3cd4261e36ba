#include <doctest.h>

#include <random>
#include <sstream>

#include "cantcn/canlog.hpp"

using namespace cantcn::canlog;

TEST_CASE("candump line with full payload")
{
    const auto log = parse_candump("(1600000000.000100) can0 123#0011223344556677\n");
    REQUIRE(log.frames().size() == 1);
    const auto& f = log.frames()[0];
    CHECK(f.timestamp_us == 1'600'000'000'000'100);
    CHECK(f.seconds() == doctest::Approx(1600000000.0001));
    CHECK(f.can_id == 0x123);
    CHECK(f.channel == "can0");
    CHECK_FALSE(f.extended);
    const std::vector<std::uint8_t> expected{0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77};
    CHECK(std::vector<std::uint8_t>(f.payload().begin(), f.payload().end()) == expected);
}

TEST_CASE("candump short payload and lower-case hex")
{
    const auto log = parse_candump("(1.000000) can0 2A0#DEAD\n(1.5) vcan1 2a1#beef\n");
    REQUIRE(log.frames().size() == 2);
    CHECK(log.frames()[0].timestamp_us == 1'000'000);
    CHECK(log.frames()[0].can_id == 0x2A0);
    CHECK(log.frames()[0].dlc == 2);
    CHECK(log.frames()[0].data[0] == 0xDE);
    CHECK(log.frames()[0].data[1] == 0xAD);
    CHECK(log.frames()[1].timestamp_us == 1'500'000);
    CHECK(log.frames()[1].channel == "vcan1");
    CHECK(log.frames()[1].data[1] == 0xEF);
}

TEST_CASE("candump empty payload and extended identifier")
{
    const auto log = parse_candump("(2.000001) can0 18FF0A01#\n");
    const auto& f = log.frames().at(0);
    CHECK(f.extended);
    CHECK(f.can_id == 0x18FF0A01);
    CHECK(f.dlc == 0);
    CHECK(format_candump_line(f) == "(2.000001) can0 18FF0A01#");
}

TEST_CASE("candump blank lines are skipped and counted")
{
    const auto log = parse_candump("\n(1.000000) can0 123#AB\n   \n\n(2.000000) can0 123#CD\n");
    CHECK(log.frames().size() == 2);
    CHECK(log.skipped_blank_lines == 3);
}

TEST_CASE("candump malformed input reports the line")
{
    try {
        parse_candump("garbage line\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
        CHECK(e.text() == "garbage line");
    }

    auto line_of = [](std::string_view text) -> std::size_t {
        try {
            parse_candump(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("(1.000000) can0 123#ABC\n") == 1);                    // odd digits
    CHECK(line_of("(1.000000) can0 123#00\n(2.0) can0 123#001122334455667788\n") == 2); // 9 bytes
    CHECK(line_of("(1.000000) can0 123AB\n") == 1);                      // no '#'
    CHECK(line_of("(1.000000) can0 XYZ#00\n") == 1);
    CHECK(line_of("(abc) can0 123#00\n") == 1);
    CHECK(line_of("(1.000000) can0 123#0G\n") == 1);
    CHECK(line_of("(1.000000) can0 800#00\n") == 1);                     // > 11 bits in 3 digits
    CHECK(line_of("(1.000000) can0 3FFFFFFF#00\n") == 1);                // > 29 bits
    CHECK(line_of("(1.000000) can0 123#00 extra\n") == 1);
}

TEST_CASE("decreasing timestamps are rejected unless allowed")
{
    const std::string text = "(2.000000) can0 123#00\n(1.000000) can0 123#01\n";
    CHECK_THROWS_AS(parse_candump(text), ParseError);

    const auto log = parse_candump(text, ParseOptions{.allow_decreasing_timestamps = true});
    CHECK(log.frames().size() == 2);
    REQUIRE(log.warnings.size() == 1);
    CHECK(log.warnings[0].find("line 2") != std::string::npos);
    CHECK(log.frames()[1].timestamp_us == 1'000'000); // file order kept
}

TEST_CASE("write_candump format")
{
    CanFrame f;
    f.timestamp_us = 1'000'000;
    f.can_id = 0x123;
    const std::uint8_t byte = 0xAB;
    f.set_payload(std::span(&byte, 1));
    CanLog log;
    log.records = std::vector<CanFrame>{f};
    CHECK(write_candump(log) == "(1.000000) can0 123#AB\n");

    CanLog empty;
    empty.records = std::vector<CanFrame>{};
    CHECK(write_candump(empty).empty());

    CanLog signals;
    signals.source_format = SourceFormat::syncan_csv;
    signals.records = std::vector<SignalRecord>{};
    CHECK_THROWS_AS(write_candump(signals), UnsupportedFormat);
}

TEST_CASE("candump round trip on random frames")
{
    std::mt19937_64 gen(42);
    std::vector<CanFrame> frames;
    std::int64_t ts = 0;
    for (int i = 0; i < 1000; ++i) {
        CanFrame f;
        ts += static_cast<std::int64_t>(gen() % 5000);
        f.timestamp_us = ts;
        f.extended = gen() % 4 == 0;
        f.can_id = static_cast<std::uint32_t>(f.extended ? gen() % (kMaxCanId + 1) : gen() % 0x800);
        f.channel = gen() % 2 ? "can0" : "can1";
        f.dlc = static_cast<std::uint8_t>(gen() % 9);
        for (std::size_t b = 0; b < f.dlc; ++b)
            f.data[b] = static_cast<std::uint8_t>(gen());
        frames.push_back(f);
    }
    CanLog log;
    log.records = frames;
    const std::string first = write_candump(log);
    const CanLog parsed = parse_candump(first);
    CHECK(parsed.frames() == frames);
    CHECK(write_candump(parsed) == first);
}

TEST_CASE("syncan rows")
{
    const std::string text = "Label,Time,ID,Signal1,Signal2,Signal3,Signal4\n"
                             "1,150.0,id2,0.5,0.25,0.125,\n"
                             "0,150.5,id3,0.9,0.1,,\n";
    const auto log = parse_syncan_csv(text);
    const auto& recs = log.signal_records();
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].label == 1);
    CHECK(recs[0].timestamp == 150.0);
    CHECK(recs[0].msg_id == "id2");
    CHECK(recs[0].signals == std::vector<double>{0.5, 0.25, 0.125});
    CHECK(recs[1].label == 0);
    CHECK(recs[1].signals == std::vector<double>{0.9, 0.1});
}

TEST_CASE("syncan errors carry the row number")
{
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            parse_syncan_csv(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    const std::string header = "Label,Time,ID,Signal1,Signal2,Signal3,Signal4\n";
    CHECK(line_of(header + "2,1.0,id2,0.5,,,\n") == 2);
    CHECK(line_of(header + "0,1.0,id2,0.5,,,\n0,x,id2,0.5,,,\n") == 3);
    CHECK(line_of(header + "0,1.0,id2,abc,,,\n") == 2);
    CHECK(line_of(header + "0,1.0,id2,,,,\n") == 2);
    CHECK(line_of(header + "0,1.0,id2,0.5,0.1,,\n0,2.0,id2,0.5,,,\n") == 3); // width changed
}

TEST_CASE("syncan file without a label column defaults to benign")
{
    const auto log = parse_syncan_csv("Time,ID,Signal1,Signal2\n0.0,id1,0.3,0.4\n1.0,id1,0.5,0.6\n");
    const auto& recs = log.signal_records();
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].label == 0);
    CHECK(recs[1].signals == std::vector<double>{0.5, 0.6});
}

TEST_CASE("split_by_id keeps order and covers every record")
{
    std::vector<CanFrame> frames(3);
    frames[0].can_id = 0xA;
    frames[1].can_id = 0xB;
    frames[2].can_id = 0xA;
    for (std::size_t i = 0; i < frames.size(); ++i)
        frames[i].timestamp_us = static_cast<std::int64_t>(i);

    const auto parts = split_by_id(frames);
    REQUIRE(parts.size() == 2);
    CHECK(parts.at(0xA) == std::vector<CanFrame>{frames[0], frames[2]});
    CHECK(parts.at(0xB) == std::vector<CanFrame>{frames[1]});
    CHECK(split_by_id(std::span<const CanFrame>{}).empty());

    std::mt19937 gen(3);
    std::vector<SignalRecord> recs;
    for (int i = 0; i < 500; ++i)
        recs.push_back({static_cast<double>(i), "id" + std::to_string(gen() % 7), 0, {1.0}});
    std::size_t total = 0;
    for (const auto& [id, part] : split_by_id(recs)) {
        total += part.size();
        for (std::size_t i = 1; i < part.size(); ++i)
            CHECK(part[i - 1].timestamp < part[i].timestamp);
        for (const auto& r : part)
            CHECK(r.msg_id == id);
    }
    CHECK(total == recs.size());
}

TEST_CASE("format detection")
{
    CHECK(detect_format("(1.0) can0 123#00") == SourceFormat::candump);
    CHECK(detect_format("Label,Time,ID,Signal1") == SourceFormat::syncan_csv);
}

TEST_CASE("to_series carries labels")
{
    std::vector<SignalRecord> recs{{0.0, "id1", 0, {1, 2}}, {1.0, "id1", 1, {3, 4}}};
    const auto ls = to_series(recs);
    CHECK(ls.series.n_signals == 2);
    CHECK(ls.series.size() == 2);
    CHECK(ls.series.at(1, 0) == 3);
    CHECK(ls.labels == std::vector<std::uint8_t>{0, 1});
}
