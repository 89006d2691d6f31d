#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "scar/harness.hpp"
#include "scar/metrics.hpp"
#include "scar/pnm.hpp"
#include "scar/synth.hpp"

using namespace scar;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("scar_harness_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::map<std::string, std::string> dir_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out[fs::relative(entry.path(), root).string()] = ss.str();
    }
    return out;
}

RunConfig small_config() {
    RunConfig cfg;
    cfg.synth_clips = 3;
    cfg.synth_frames = 8;
    cfg.synth_hold_frames = 2;
    return cfg;
}

}  // namespace

TEST_CASE("synth-gen is deterministic and produces warning-free clips") {
    const RunConfig cfg = small_config();
    const fs::path a = fresh_dir("synth_a"), b = fresh_dir("synth_b");
    harness::cmd_synth_gen(cfg, a);
    harness::cmd_synth_gen(cfg, b);
    CHECK(dir_bytes(a) == dir_bytes(b));

    const auto manifests = find_clip_manifests(a);
    CHECK(manifests.size() == 3);
    for (const auto& m : manifests) CHECK(validate_clip(load_clip(m)).empty());

    SUBCASE("zero clips is a config error") {
        RunConfig zero = cfg;
        zero.synth_clips = 0;
        CHECK_THROWS_AS(harness::cmd_synth_gen(zero, fresh_dir("synth_zero")), BadConfig);
    }
}

TEST_CASE("curate writes pairs and a faithful contact summary") {
    const RunConfig cfg = small_config();
    const fs::path data = fresh_dir("curate_data"), out = fresh_dir("curate_out");
    harness::cmd_synth_gen(cfg, data);
    harness::cmd_curate(cfg, data, out);

    // contact_frame per clip from the dataset index
    std::map<std::string, int> contact_frame;
    std::ifstream index(data / "index.txt");
    std::string line;
    std::getline(index, line);
    while (std::getline(index, line)) {
        std::vector<std::string> fields;
        std::istringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        REQUIRE(fields.size() == 7);
        contact_frame[fields[0]] = std::stoi(fields[5]);
    }
    REQUIRE(contact_frame.size() == 3);

    std::ifstream summary(out / "curation_summary.tsv");
    REQUIRE(summary.good());
    std::getline(summary, line);
    int rows = 0;
    while (std::getline(summary, line)) {
        std::istringstream ss(line);
        std::string clip_id;
        int frame;
        long count;
        ss >> clip_id >> frame >> count;
        if (frame < contact_frame.at(clip_id))
            CHECK(count == 0);
        else
            CHECK(count > 0);
        ++rows;
    }
    CHECK(rows == 3 * cfg.synth_frames);

    SUBCASE("re-running reproduces identical outputs") {
        const fs::path out2 = fresh_dir("curate_out2");
        harness::cmd_curate(cfg, data, out2);
        CHECK(dir_bytes(out) == dir_bytes(out2));
    }
    SUBCASE("an empty dataset dir is a config error") {
        CHECK_THROWS_AS(harness::cmd_curate(cfg, fresh_dir("curate_empty"), out), BadConfig);
    }
}

TEST_CASE("eval identity and degenerate cases") {
    const RunConfig cfg = small_config();
    const fs::path data = fresh_dir("eval_data"), cur = fresh_dir("eval_cur");
    harness::cmd_synth_gen(cfg, data);
    harness::cmd_curate(cfg, data, cur);

    SUBCASE("generated == reference gives zero error and full IoU") {
        const MetricsReport report = evaluate_dirs(cur, cur, harness::overlay_colors(cfg),
                                                   cfg.eval_color_tolerance);
        for (const auto& c : report.clips) {
            CHECK(c.rgb_mse == doctest::Approx(0.0));
            CHECK(std::isinf(c.rgb_psnr));
            CHECK(c.contact_iou == doctest::Approx(1.0));
        }
    }
    SUBCASE("all-gray frames contain no contact pixels") {
        const fs::path gray_dir = fresh_dir("eval_gray");
        for (const auto& m : find_clip_manifests(cur)) {
            PairedClip pair = load_pair(m);
            for (auto& f : pair.scar)
                std::fill(f.rgb.begin(), f.rgb.end(), 0.5f);
            Clip shell;
            shell.manifest = pair.manifest;
            shell.rgb = pair.rgb;
            ScarVideo video;
            video.clip_id = pair.manifest.clip_id;
            video.fps = pair.manifest.fps;
            video.task_description = pair.manifest.task_description;
            video.frames = pair.scar;
            write_pair(shell, video, gray_dir / pair.manifest.clip_id);
        }
        const MetricsReport report = evaluate_dirs(gray_dir, cur, harness::overlay_colors(cfg),
                                                   cfg.eval_color_tolerance);
        for (const auto& c : report.clips) CHECK(c.contact_iou == doctest::Approx(0.0));
    }
    SUBCASE("missing reference ids are fatal") {
        const fs::path partial = fresh_dir("eval_partial");
        const auto manifests = find_clip_manifests(cur);
        const PairedClip pair = load_pair(manifests[0]);
        Clip shell;
        shell.manifest = pair.manifest;
        shell.manifest.clip_id = "clip_unmatched";
        shell.rgb = pair.rgb;
        ScarVideo video;
        video.clip_id = "clip_unmatched";
        video.fps = pair.manifest.fps;
        video.task_description = pair.manifest.task_description;
        video.frames = pair.scar;
        write_pair(shell, video, partial / "clip_unmatched");
        CHECK_THROWS_AS(evaluate_dirs(partial, cur, harness::overlay_colors(cfg),
                                      cfg.eval_color_tolerance),
                        MissingReference);
    }
}

TEST_CASE("contact IoU equals a brute-force set computation") {
    const RunConfig cfg = small_config();
    const OverlayColors colors = harness::overlay_colors(cfg);
    Rng rng(1234);
    RgbImage a(24, 24), b(24, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
            const bool ca = rng.uniform01() < 0.2, cb = rng.uniform01() < 0.2;
            a.set(x, y, ca ? 0.95f : 0.4f, 0.1f, ca ? 0.05f : 0.4f);
            b.set(x, y, cb ? 1.0f : 0.4f, 0.0f, cb ? 0.0f : 0.4f);
        }

    const BinaryMask ma = contact_pixels(a, colors, cfg.eval_color_tolerance);
    const BinaryMask mb = contact_pixels(b, colors, cfg.eval_color_tolerance);

    // Second, set-based route.
    std::set<std::pair<int, int>> sa, sb;
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
            if (ma.at(x, y)) sa.insert({x, y});
            if (mb.at(x, y)) sb.insert({x, y});
        }
    std::size_t inter = 0;
    for (const auto& p : sa) inter += sb.count(p);
    const std::size_t uni = sa.size() + sb.size() - inter;
    const double expected = uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
    CHECK(mask_iou(ma, mb) == doctest::Approx(expected));
    CHECK(!ma.none());
}

TEST_CASE("oracle-check passes clean and fails under fault injection") {
    RunConfig cfg;
    const fs::path out = fresh_dir("oracle_out");
    CHECK(harness::cmd_oracle_check(cfg, out, false));
    CHECK(!fs::exists(out / "counterexample_mask.pgm"));

    CHECK(!harness::cmd_oracle_check(cfg, out, true));
    CHECK(fs::exists(out / "counterexample_mask.pgm"));
    CHECK(fs::exists(out / "oracle_failure.txt"));
}
