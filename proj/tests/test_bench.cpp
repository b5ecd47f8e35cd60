#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support/checks.hpp"

using namespace rayvr;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("rayvr_bench_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

RenderOptions small(const std::filesystem::path& dir, const char* scene = "cornell") {
    RenderOptions o;
    o.scene = fixture::scene_path(scene);
    o.size = {32, 24};
    o.workers = 1;
    o.out = dir / "out.png";
    return o;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("parse_size") {
    CHECK(parse_size("512x256") == ImageSize{512, 256});
    CHECK(parse_size("1x1") == ImageSize{1, 1});
    for (const char* bad : {"", "512", "x512", "512x", "0x10", "-4x4", "12x12x", "axb", "512 x 512"}) {
        CHECK_THROWS_AS(parse_size(bad), std::invalid_argument);
    }
}

TEST_CASE("stereo render writes a side-by-side image") {
    const auto dir = temp_dir("stereo");
    RenderOptions o = small(dir);
    o.stereo = true;
    o.frames = 2;
    o.stats = dir / "stats.json";
    o.stats_csv = dir / "stats.csv";
    o.hdr_out = dir / "out.pfm";
    std::ostringstream log, err;
    REQUIRE(cli_render(o, log, err) == 0);
    const LdrImage img = read_png(o.out);
    CHECK(img.width == 64);
    CHECK(img.height == 24);
    const HdrImage hdr = read_pfm(*o.hdr_out);
    CHECK(hdr.width == 64);
    const auto stats = nlohmann::json::parse(slurp(*o.stats));
    CHECK(stats["stereo"] == true);
    CHECK(stats["frame"] == 1);
    CHECK(stats["width"] == 32);
    CHECK(lines(slurp(*o.stats_csv)) == 3);
    CHECK(err.str().empty());
}

TEST_CASE("effect override and G-buffer dumps") {
    const auto dir = temp_dir("dump");
    RenderOptions o = small(dir, "arcade-like");
    o.effect_override = EffectId::Mirror;
    o.stereo = true;
    o.dump_gbuffer = "normal";
    std::ostringstream log, err;
    REQUIRE(cli_render(o, log, err) == 0);
    CHECK(std::filesystem::exists(dir / "out_gbuffer_normal_left.png"));
    CHECK(std::filesystem::exists(dir / "out_gbuffer_normal_right.png"));
    CHECK(read_png(dir / "out_gbuffer_normal_left.png").width == 32);

    // overriding to Raster changes the image
    RenderOptions r = small(dir, "arcade-like");
    r.out = dir / "raster.png";
    r.effect_override = EffectId::Raster;
    REQUIRE(cli_render(r, log, err) == 0);
    RenderOptions m = r;
    m.out = dir / "mirror.png";
    m.effect_override = EffectId::Mirror;
    REQUIRE(cli_render(m, log, err) == 0);
    CHECK_FALSE(read_png(r.out) == read_png(m.out));
}

TEST_CASE("render errors give a nonzero exit") {
    const auto dir = temp_dir("errors");
    std::ostringstream log, err;
    RenderOptions o = small(dir);
    o.scene = dir / "missing.json";
    CHECK(cli_render(o, log, err) != 0);
    CHECK_FALSE(err.str().empty());

    std::ofstream(dir / "broken.json") << "{ not json";
    o.scene = dir / "broken.json";
    CHECK(cli_render(o, log, err) != 0);

    RenderOptions zero = small(dir);
    zero.spp = 0;
    CHECK(cli_render(zero, log, err) != 0);
    RenderOptions dump = small(dir);
    dump.dump_gbuffer = "albedo";
    CHECK(cli_render(dump, log, err) != 0);
}

TEST_CASE("benchmark tables") {
    CHECK(table1_configs(EffectId::Mirror).size() == 6);
    CHECK(table3_configs().size() == 8);
    BenchOptions o;
    o.scenes = {fixture::scene_path("cornell")};
    o.size = {16, 16};
    o.frames = 2;
    o.warmup = 0;
    o.workers = 1;
    std::ostringstream progress;
    const auto rows = run_bench(o, &progress);
    CHECK(rows.size() == 14);
    for (const BenchRow& r : rows) {
        CHECK(r.frames == 2);
        CHECK(r.mean_ms > 0.0);
        CHECK(r.fps_equivalent == doctest::Approx(1000.0 / r.mean_ms));
        CHECK(r.scene == "cornell");
    }
    const std::string csv = rows_to_csv(rows);
    CHECK(lines(csv) == rows.size() + 1);
    const std::string tables = format_tables(rows);
    CHECK(tables.find("G-Buffer") != std::string::npos);
    CHECK(tables.find("Path traced") != std::string::npos);

    o.tables = "III";
    CHECK(run_bench(o, nullptr).size() == 8);
    o.tables = "IV";
    std::ostringstream out, err;
    CHECK(cli_bench(o, out, err) != 0);
}

TEST_CASE("table I rows measure what they claim") {
    const Scene s = load_scene(fixture::scene_path("cornell"));
    const Tlas tlas = build_accel(s);
    BenchOptions o;
    o.size = {16, 16};
    o.frames = 1;
    o.warmup = 0;
    Renderer renderer(1);
    for (const BenchConfig& c : table1_configs(EffectId::Mirror)) {
        const BenchRow row = measure(s, tlas, c, o, renderer);
        const std::uint64_t pixels = 256u * (c.stereo ? 2 : 1);
        if (c.mode == RayGenMode::GBufferDerived || c.effect == EffectId::Raster) {
            CHECK(row.rays.primary == 0);
        } else {
            CHECK(row.rays.primary == pixels);
        }
        if (c.effect == EffectId::Mirror) CHECK(row.rays.reflection > 0);
    }
}

}
