#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "xpomcp/errors.hpp"
#include "xpomcp/trace.hpp"

using namespace xpomcp;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "xpomcp-test-trace";
    fs::create_directories(dir);
    return dir / name;
}

Trace sample_trace() {
    Trace trace;
    trace.header.model_id = "tiger";
    trace.header.model_params_hash = "0123456789abcdef";
    trace.header.w = 40.0;
    trace.header.particle_count = 8192;
    trace.header.seed = 42;
    trace.header.created_at = "2000-01-01T00:00:00Z";

    TraceStep a;
    a.run_id = 0;
    a.step_index = 0;
    a.action = 0;
    a.belief = {{"p_left", 0.5}, {"p_right", 0.5}};
    a.optimal_action = 0;

    TraceStep b;
    b.run_id = 0;
    b.step_index = 1;
    b.action = 2;
    b.belief = {{"p_left", 0.85}, {"p_right", 0.15}};
    b.particle_histogram = std::map<std::uint64_t, int>{{0, 6963}, {1, 1229}};

    TraceStep c;
    c.run_id = 1;
    c.step_index = 0;
    c.action = 0;
    c.belief = {{"p_left", 0.5}, {"p_right", 0.5}};

    trace.steps = {a, b, c};
    return trace;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

const char* kHeaderLine =
    R"({"format_version":1,"model_id":"tiger","model_params_hash":"x",)"
    R"("w":40.0,"particle_count":8,"seed":1,"created_at":"t"})";

}  // namespace

TEST_CASE("trace round-trips through JSONL without loss") {
    const Trace trace = sample_trace();
    const fs::path path = temp_file("roundtrip.jsonl");
    write_trace(trace, path.string());
    const Trace back = read_trace(path.string());
    CHECK(back == trace);
    CHECK(back.steps[1].particle_histogram.has_value());
    CHECK_FALSE(back.steps[2].optimal_action.has_value());
}

TEST_CASE("writer rejects invalid traces") {
    Trace trace = sample_trace();
    const fs::path path = temp_file("invalid.jsonl");

    SUBCASE("no steps") {
        trace.steps.clear();
        CHECK_THROWS_AS(write_trace(trace, path.string()), ValidationError);
    }
    SUBCASE("belief does not sum to 1") {
        trace.steps[0].belief["p_left"] = 0.7;  // 0.7 + 0.5 = 1.2
        CHECK_THROWS_WITH_AS(write_trace(trace, path.string()),
                             doctest::Contains("sums to 1.2"), ValidationError);
    }
    SUBCASE("belief entry outside [0,1]") {
        trace.steps[0].belief = {{"p_left", 1.5}, {"p_right", -0.5}};
        CHECK_THROWS_AS(write_trace(trace, path.string()), ValidationError);
    }
    SUBCASE("non-increasing step index within a run") {
        trace.steps[1].step_index = 0;
        CHECK_THROWS_AS(write_trace(trace, path.string()), ValidationError);
    }
    SUBCASE("empty model id") {
        trace.header.model_id.clear();
        CHECK_THROWS_AS(write_trace(trace, path.string()), ValidationError);
    }
}

TEST_CASE("reader reports malformed input with line numbers") {
    const fs::path path = temp_file("malformed.jsonl");

    SUBCASE("truncated JSON line") {
        write_text(path, std::string(kHeaderLine) + "\n{\"run\":0,\"ste\n");
        CHECK_THROWS_WITH_AS(read_trace(path.string()),
                             doctest::Contains("line 2"), ParseError);
    }
    SUBCASE("unknown key") {
        write_text(path, std::string(kHeaderLine) +
                             "\n{\"run\":0,\"step\":0,\"action\":0,"
                             "\"belief\":{\"p\":0.5,\"q\":0.5},\"extra\":1}\n");
        CHECK_THROWS_WITH_AS(read_trace(path.string()),
                             doctest::Contains("unknown key"), ParseError);
    }
    SUBCASE("belief sum validation on read") {
        write_text(path, std::string(kHeaderLine) +
                             "\n{\"run\":0,\"step\":0,\"action\":0,"
                             "\"belief\":{\"p\":0.7,\"q\":0.5}}\n");
        CHECK_THROWS_WITH_AS(read_trace(path.string()),
                             doctest::Contains("line 2"), ValidationError);
    }
    SUBCASE("unsupported format version") {
        write_text(path, "{\"format_version\":2,\"model_id\":\"tiger\","
                         "\"model_params_hash\":\"x\",\"w\":1.0,"
                         "\"particle_count\":1,\"seed\":0,\"created_at\":\"t\"}\n");
        CHECK_THROWS_AS(read_trace(path.string()), ParseError);
    }
    SUBCASE("empty file") {
        write_text(path, "");
        CHECK_THROWS_AS(read_trace(path.string()), ParseError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_trace((path.parent_path() / "nope.jsonl").string()),
                        Error);
    }
}

TEST_CASE("validate_trace accepts the writer's own output") {
    CHECK_NOTHROW(validate_trace(sample_trace()));
}
