#include "scar/harness.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "scar/checkpoint.hpp"
#include "scar/ingest.hpp"
#include "scar/metrics.hpp"
#include "scar/plot.hpp"
#include "scar/pnm.hpp"
#include "scar/sampler.hpp"
#include "scar/synth.hpp"
#include "scar/train.hpp"

namespace scar::harness {

namespace fs = std::filesystem;

RadiusParams radius_params(const RunConfig& cfg) {
    RadiusParams p;
    p.r_h = cfg.repr_r_h;
    p.r_min = cfg.repr_r_min;
    p.r_max = cfg.repr_r_max;
    p.beta = cfg.repr_beta;
    return p;
}

OverlayColors overlay_colors(const RunConfig& cfg) {
    OverlayColors c;
    for (int i = 0; i < 3; ++i) {
        c.hand[i] = static_cast<float>(cfg.repr_hand_color[i]);
        c.object[i] = static_cast<float>(cfg.repr_object_color[i]);
        c.contact[i] = static_cast<float>(cfg.repr_contact_color[i]);
    }
    return c;
}

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string clip_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "clip_%05d", i);
    return buf;
}

std::string checkpoint_name(std::uint64_t step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt_%06llu.bin", static_cast<unsigned long long>(step));
    return buf;
}

LatentCodec build_codec(const RunConfig& cfg, const std::vector<PairedClip>& pairs) {
    PatchShape patch{cfg.codec_patch_t, cfg.codec_patch_h, cfg.codec_patch_w};
    if (cfg.codec_mode == "orthonormal") {
        if (cfg.codec_channels != patch.volume())
            throw BadConfig("orthonormal codec needs codec.channels == patch volume (" +
                            std::to_string(patch.volume()) + ")");
        return LatentCodec::orthonormal(patch, cfg.seed);
    }
    std::vector<const std::vector<RgbImage>*> videos;
    for (const PairedClip& p : pairs) {
        videos.push_back(&p.rgb);
        videos.push_back(&p.scar);
    }
    return LatentCodec::fit_pca(patch, cfg.codec_channels, videos, cfg.codec_scale_floor);
}

std::vector<PairedClip> load_pairs(const fs::path& dataset_dir) {
    const auto manifests = find_clip_manifests(dataset_dir);
    if (manifests.empty())
        throw BadConfig("no curated clips found under " + dataset_dir.string());
    std::vector<PairedClip> pairs;
    pairs.reserve(manifests.size());
    for (const auto& m : manifests) pairs.push_back(load_pair(m));
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        const auto& a = pairs[0].manifest;
        const auto& b = pairs[i].manifest;
        if (a.width != b.width || a.height != b.height || a.frame_count != b.frame_count)
            throw ShapeMismatch("clip '" + b.clip_id + "' does not match the dataset shape");
    }
    return pairs;
}

std::vector<std::array<double, 4>> read_loss_log(const fs::path& path) {
    std::vector<std::array<double, 4>> rows;
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::array<double, 4> row{};
        double step;
        if (ss >> step >> row[0] >> row[1] >> row[2] >> row[3]) rows.push_back(row);
    }
    return rows;
}

RgbImage load_first_rgb_frame(const fs::path& manifest_path, ClipManifest& manifest_out) {
    manifest_out = read_manifest(manifest_path);
    const auto it = manifest_out.stream_patterns.find("rgb");
    if (it == manifest_out.stream_patterns.end())
        throw BadManifest("conditioning manifest has no rgb stream: " + manifest_path.string());
    return pnm::read_rgb8(manifest_path.parent_path() / frame_file_name(it->second, 0));
}

}  // namespace

void cmd_synth_gen(const RunConfig& cfg, const fs::path& out_dir) {
    if (cfg.synth_clips < 1) throw BadConfig("synth.clips must be >= 1 for synth-gen");
    ensure_dir(out_dir);

    std::ofstream index(out_dir / "index.txt");
    if (!index) throw IoError("cannot write index: " + (out_dir / "index.txt").string());
    index << "clip_id\ttask_id\ttask_description\tseed\thold_frames\tcontact_frame\tspeed\n";

    const int n_tasks = static_cast<int>(task_vocabulary().size());
    for (int i = 0; i < cfg.synth_clips; ++i) {
        const std::uint64_t scene_seed = hash_mix(cfg.seed, 1000 + i);
        const SceneSpec spec =
            random_scene_spec(scene_seed, i % n_tasks, cfg.synth_frames, cfg.synth_width,
                              cfg.synth_height, cfg.synth_fps, cfg.synth_hold_frames);
        Clip clip = generate_scene(spec);
        clip.manifest.clip_id = clip_name(i);
        write_clip(clip, out_dir / clip.manifest.clip_id);
        index << clip.manifest.clip_id << "\t" << spec.task_id << "\t"
              << clip.manifest.task_description << "\t" << spec.seed << "\t" << spec.hold_frames
              << "\t" << spec.contact_frame << "\t" << spec.speed << "\n";
        std::cout << "synth-gen: wrote " << clip.manifest.clip_id << " (task " << spec.task_id
                  << ")\n";
    }
    std::cout << "synth-gen: " << cfg.synth_clips << " clips under " << out_dir.string() << "\n";
}

void cmd_curate(const RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir) {
    const auto manifests = find_clip_manifests(dataset_dir);
    if (manifests.empty()) throw BadConfig("no clips found under " + dataset_dir.string());
    ensure_dir(out_dir);

    const RadiusParams params = radius_params(cfg);
    const OverlayColors colors = overlay_colors(cfg);

    std::ofstream summary(out_dir / "curation_summary.tsv");
    if (!summary) throw IoError("cannot write curation summary");
    summary << "clip_id\tframe\tcontact_pixels\n";

    for (const auto& manifest_path : manifests) {
        std::vector<std::string> warnings;
        const Clip clip = load_clip(manifest_path, &warnings);
        for (const auto& w : validate_clip(clip)) warnings.push_back(w);
        for (const auto& w : warnings)
            std::cout << "curate: [" << clip.manifest.clip_id << "] warning: " << w << "\n";

        const ScarVideo video = curate_clip(clip, params, static_cast<float>(cfg.repr_alpha),
                                            colors);
        write_pair(clip, video, out_dir / clip.manifest.clip_id);
        for (int f = 0; f < clip.frames(); ++f)
            summary << clip.manifest.clip_id << "\t" << f << "\t"
                    << estimate_contact(clip.hand_masks[f], clip.object_masks[f], params).count()
                    << "\n";
        std::cout << "curate: " << clip.manifest.clip_id << " -> " << video.frames.size()
                  << " frames\n";
    }
}

void cmd_train(const RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir,
               const fs::path& resume, bool allow_mismatch) {
    const std::vector<PairedClip> pairs = load_pairs(dataset_dir);
    ensure_dir(out_dir);

    LatentCodec codec;
    NoiseSchedule sched;
    DenoiserState state;
    std::uint64_t start_step = 0;
    std::uint64_t rng_state = 0;
    bool resumed = false;

    if (!resume.empty()) {
        Checkpoint ckpt = load_checkpoint(resume, &cfg, allow_mismatch);
        codec = std::move(ckpt.codec);
        sched = std::move(ckpt.schedule);
        state = std::move(ckpt.state);
        start_step = ckpt.step;
        rng_state = ckpt.rng_state;
        resumed = true;
        std::cout << "train: resumed from " << resume.string() << " at step " << start_step
                  << "\n";
    } else {
        codec = build_codec(cfg, pairs);
        sched = NoiseSchedule::cosine(cfg.sched_timesteps);
        const TokenGrid grid = codec.grid_for(pairs[0].manifest.frame_count,
                                              pairs[0].manifest.height, pairs[0].manifest.width);
        const ModelConfig mc = ModelConfig::from_run_config(
            cfg, grid, codec.channels(), static_cast<int>(task_vocabulary().size()));
        state = DenoiserState::init(mc, cfg.seed);
        std::cout << "train: initialized model with " << state.parameter_count()
                  << " parameters, codec mode " << codec.mode() << "\n";
    }

    std::vector<TrainItem> items;
    items.reserve(pairs.size());
    for (const PairedClip& p : pairs) {
        TrainItem item;
        const TokenSequence seq = encode_pair(p.rgb, p.scar, codec);
        item.z0 = seq.tokens;
        item.cond.task_id = task_id_for(p.manifest.task_description);
        item.cond.first_frame_tokens = encode_first_frame(p.rgb[0], codec);
        items.push_back(std::move(item));
    }

    LossWeights weights{cfg.loss_lambda_hoi, cfg.loss_lambda_align};
    AdamConfig adam;
    adam.lr = cfg.train_lr;
    Trainer trainer(std::move(state), sched, weights, adam, cfg.train_detach_alignment, cfg.seed);
    if (resumed) {
        trainer.set_steps_done(start_step);
        trainer.rng().set_state(rng_state);
    }

    const fs::path log_path = out_dir / "loss_log.tsv";
    std::ofstream log(log_path, resumed ? std::ios::app : std::ios::trunc);
    if (!log) throw IoError("cannot write " + log_path.string());
    if (!resumed) log << "step\tl_rgb\tl_hoi\tl_align\ttotal\n";

    const auto save = [&](const fs::path& path) {
        Checkpoint ckpt;
        ckpt.config_text = cfg.to_text();
        ckpt.schedule = trainer.schedule();
        ckpt.codec = codec;
        ckpt.state = trainer.state();
        ckpt.step = trainer.steps_done();
        ckpt.rng_state = trainer.rng().state();
        save_checkpoint(ckpt, path);
    };

    for (std::uint64_t step = start_step + 1; step <= static_cast<std::uint64_t>(cfg.train_steps);
         ++step) {
        const LossComponents c = trainer.step(items, cfg.train_batch);
        log << step << "\t" << c.rgb << "\t" << c.hoi << "\t" << c.align << "\t" << c.total
            << "\n";
        if (step % 100 == 0 || step == 1 || step == static_cast<std::uint64_t>(cfg.train_steps)) {
            std::cout << "train: step " << step << " total " << c.total << " (rgb " << c.rgb
                      << ", hoi " << c.hoi << ", align " << c.align << ")" << std::endl;
            log.flush();
        }
        if (step % static_cast<std::uint64_t>(cfg.train_checkpoint_every) == 0)
            save(out_dir / checkpoint_name(step));
    }
    save(out_dir / "checkpoint.bin");
    log.flush();

    const auto rows = read_loss_log(log_path);
    std::vector<PlotSeries> series(4);
    series[0].label = "total";
    series[1].label = "rgb";
    series[2].label = "hoi";
    series[3].label = "align";
    for (const auto& row : rows) {
        series[0].values.push_back(row[3]);
        series[1].values.push_back(row[0]);
        series[2].values.push_back(row[1]);
        series[3].values.push_back(row[2]);
    }
    render_loss_plot(series, out_dir / "loss_curve.ppm");
    std::cout << "train: done at step " << trainer.steps_done() << ", checkpoint at "
              << (out_dir / "checkpoint.bin").string() << "\n";
}

void cmd_sample(const RunConfig& cfg, const fs::path& checkpoint_path,
                const fs::path& cond_manifest, const fs::path& out_dir, bool allow_mismatch) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path, &cfg, allow_mismatch);

    ClipManifest cond;
    const RgbImage first_frame = load_first_rgb_frame(cond_manifest, cond);
    const int task_id = task_id_for(cond.task_description);

    std::vector<RgbImage> gt_scar;
    if (cond.stream_patterns.count("scar")) {
        const ScarVideo gt = load_scar_video(cond_manifest);
        gt_scar = gt.frames;
    }

    const SampleResult result = sample_clip(first_frame, task_id, ckpt.state, ckpt.codec,
                                            ckpt.schedule, cfg.sample_steps, cfg.seed);

    const fs::path clip_dir = out_dir / cond.clip_id;
    ensure_dir(clip_dir);
    ClipManifest m;
    m.clip_id = cond.clip_id;
    m.frame_count = static_cast<int>(result.rgb.size());
    m.width = result.rgb[0].width;
    m.height = result.rgb[0].height;
    m.fps = cond.fps;
    m.task_description = cond.task_description;
    m.stream_patterns = {{"rgb", "rgb_%05d.ppm"}, {"scar", "scar_%05d.ppm"}};
    for (std::size_t i = 0; i < result.rgb.size(); ++i) {
        pnm::write_rgb8(clip_dir / frame_file_name("rgb_%05d.ppm", static_cast<int>(i)),
                        result.rgb[i]);
        pnm::write_rgb8(clip_dir / frame_file_name("scar_%05d.ppm", static_cast<int>(i)),
                        result.scar[i]);
        std::vector<const RgbImage*> row = {&result.rgb[i], &result.scar[i]};
        if (i < gt_scar.size()) row.push_back(&gt_scar[i]);
        pnm::write_rgb8(clip_dir / frame_file_name("grid_%05d.ppm", static_cast<int>(i)),
                        montage_row(row));
    }
    write_manifest(m, clip_dir / "manifest.txt");
    std::cout << "sample: wrote " << result.rgb.size() << " frames for " << cond.clip_id
              << " under " << clip_dir.string() << "\n";
}

void cmd_eval(const RunConfig& cfg, const fs::path& generated_dir, const fs::path& reference_dir,
              const fs::path& out_dir) {
    const MetricsReport report = evaluate_dirs(generated_dir, reference_dir,
                                               overlay_colors(cfg), cfg.eval_color_tolerance);
    ensure_dir(out_dir);
    const std::string text = report_text(report);
    std::ofstream out(out_dir / "report.txt");
    if (!out) throw IoError("cannot write eval report");
    out << text;
    std::cout << text;
}

bool cmd_oracle_check(const RunConfig& cfg, const fs::path& out_dir, bool inject_fault) {
    Rng rng(hash_mix(cfg.seed, 0x0c1e));
    const RadiusParams base = radius_params(cfg);
    int mismatches = 0;
    std::string first_failure;
    BinaryMask failure_mask;

    constexpr int kDilateCases = 500;
    for (int i = 0; i < kDilateCases; ++i) {
        const int w = rng.uniform_int(4, 64), h = rng.uniform_int(4, 64);
        const BinaryMask mask = random_mask(rng, w, h);
        const int radius = rng.uniform_int(0, 6);
        const BinaryMask fast = dilate_binary(mask, radius + (inject_fault ? 1 : 0));
        const BinaryMask reference = oracle_dilate(mask, radius);
        if (!(fast == reference)) {
            if (mismatches++ == 0) {
                first_failure = "dilate case " + std::to_string(i) + " (radius " +
                                std::to_string(radius) + ", " + std::to_string(w) + "x" +
                                std::to_string(h) + ")";
                failure_mask = mask;
            }
        }
    }

    constexpr int kContactCases = 500;
    for (int i = 0; i < kContactCases; ++i) {
        const int w = rng.uniform_int(8, 64), h = rng.uniform_int(8, 64);
        const BinaryMask hand = random_mask(rng, w, h);
        const BinaryMask object = random_mask(rng, w, h);
        RadiusParams params = base;
        params.r_h = rng.uniform_int(1, 6);
        if (i % 2 == 0) {
            // Fixed-radius route: clamp forces r_o.
            params.r_min = params.r_max = rng.uniform_int(1, 6);
        }
        const int r_o = object.none() ? params.r_min
                                      : adaptive_object_radius(bbox_diagonal(object), params);
        const ContactRegion fast = estimate_contact(hand, object, params);
        const ContactRegion reference = oracle_contact(hand, object, params.r_h, r_o);
        if (!(fast == reference)) {
            if (mismatches++ == 0) {
                first_failure = "contact case " + std::to_string(i);
                failure_mask = hand;
            }
        }
    }

    if (mismatches == 0) {
        std::cout << "oracle-check: PASS, 0 mismatches over " << kDilateCases << " dilation and "
                  << kContactCases << " contact cases\n";
        return true;
    }
    ensure_dir(out_dir);
    std::vector<std::uint8_t> gray(failure_mask.bits.size());
    for (std::size_t k = 0; k < gray.size(); ++k) gray[k] = failure_mask.bits[k] ? 255 : 0;
    pnm::write_gray8(out_dir / "counterexample_mask.pgm", gray, failure_mask.width,
                     failure_mask.height);
    std::ofstream report(out_dir / "oracle_failure.txt");
    report << "first mismatch: " << first_failure << "\n"
           << "total mismatches: " << mismatches << "\n";
    std::cout << "oracle-check: FAIL, " << mismatches << " mismatches; first at " << first_failure
              << "; counterexample dumped under " << out_dir.string() << "\n";
    return false;
}

}  // namespace scar::harness
