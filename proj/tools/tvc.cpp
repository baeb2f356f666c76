// SPDX-License-Identifier: Apache-2.0
//
// tvc: compress, pack, inspect and combine task vectors from the command line.

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "external_command.hpp"
#include "tvc/artifact_io.hpp"
#include "tvc/bench.hpp"
#include "tvc/bitmask_ops.hpp"
#include "tvc/codec.hpp"
#include "tvc/compose.hpp"
#include "tvc/compress.hpp"
#include "tvc/decompose.hpp"
#include "tvc/error.hpp"
#include "tvc/merge.hpp"
#include "tvc/sweep.hpp"
#include "tvc/tensor_store.hpp"

namespace fs = std::filesystem;
using json   = nlohmann::json;

namespace {

using namespace tvc;

Dtype dtype_arg(const std::string & name) {
    auto d = parse_dtype(name);
    if (!d) {
        raise(Errc::DtypeUnsupported, "unknown dtype '" + name + "' (f32, f16, bf16)");
    }
    return *d;
}

std::string shape_string(const std::vector<std::uint64_t> & shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += (i ? "," : "") + std::to_string(shape[i]);
    }
    return s + "]";
}

FileKind kind_of(const fs::path & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(Errc::IoFailure, "cannot open '" + path.string() + "'");
    }
    std::vector<std::uint8_t> head(5, 0);
    in.read(reinterpret_cast<char *>(head.data()), static_cast<std::streamsize>(head.size()));
    head.resize(static_cast<std::size_t>(in.gcount()));
    return sniff(head);
}

bool all_compressed(const std::vector<std::string> & paths) {
    for (const auto & p : paths) {
        const auto k = kind_of(p);
        if (k != FileKind::artifact && k != FileKind::blob) {
            return false;
        }
    }
    return true;
}

std::vector<double> read_weights(const fs::path & path) {
    std::ifstream in(path);
    if (!in) {
        raise(Errc::IoFailure, "cannot open '" + path.string() + "'");
    }
    json j = json::parse(in);
    if (j.is_object()) {
        j = j.at("weights");
    }
    return j.get<std::vector<double>>();
}

void cmd_inspect(const std::string & path) {
    auto bytes = read_file(path);
    switch (sniff(bytes)) {
        case FileKind::container: {
            std::printf("%-40s %-16s %-5s %14s %14s\n", "name", "shape", "dtype", "offset", "length");
            for (const auto & m : decode_manifest(bytes)) {
                std::printf("%-40s %-16s %-5s %14" PRIu64 " %14" PRIu64 "\n", m.name.c_str(),
                            shape_string(m.shape).c_str(), std::string(to_string(m.dtype)).c_str(), m.offset_bytes,
                            m.length_elems);
            }
            return;
        }
        case FileKind::artifact:
        case FileKind::blob: {
            const auto ca = load_compressed(path);
            std::printf("k_percent %.6g  alpha %.6g  fingerprint %016" PRIx64 "\n", ca.k_percent, ca.alpha,
                        ca.source_fingerprint);
            std::printf("%-40s %-16s %12s %12s %14s\n", "name", "shape", "dim", "nonzeros", "scale");
            for (const auto & t : ca.tensors) {
                std::printf("%-40s %-16s %12" PRIu64 " %12" PRIu64 " %14.7g\n", t.name.c_str(),
                            shape_string(t.shape).c_str(), t.dim, t.nonzeros(), static_cast<double>(t.scale));
            }
            return;
        }
        case FileKind::unknown: break;
    }
    raise(Errc::ManifestCorrupt, "'" + path + "' is not a tvc file");
}

void print_stats_row(const VectorStats & s) {
    std::printf("%-40s %12" PRIu64 " %14.6g %14.6g %14.6g %14.6g\n", s.name.c_str(), s.count, s.mean, s.std, s.max,
                s.min);
}

void cmd_stats(const std::string & path) {
    const auto report = stats(load_dense(path));
    std::printf("%-40s %12s %14s %14s %14s %14s\n", "group", "count", "mean", "std", "max", "min");
    for (const auto & g : report.groups) {
        print_stats_row(g);
    }
    print_stats_row(report.pooled);
}

void cmd_size(const std::string & path) {
    auto bytes = read_file(path);
    EncodedBlob blob;
    if (sniff(bytes) == FileKind::artifact) {
        blob = encode_golomb(decode_artifact(bytes).tensors);
    } else {
        blob = parse_blob(std::move(bytes));
    }
    const auto s        = summarize(blob);
    const double density = static_cast<double>(s.nonzeros) / static_cast<double>(s.dim);
    std::printf("format          %s\n", std::string(to_string(s.format)).c_str());
    std::printf("tensors         %" PRIu64 "\n", s.tensors);
    std::printf("dim             %" PRIu64 "\n", s.dim);
    std::printf("nonzeros        %" PRIu64 "\n", s.nonzeros);
    std::printf("density         %.6g\n", density);
    std::printf("payload_bits    %" PRIu64 "\n", s.payload_bits);
    std::printf("accounted_bits  %" PRIu64 "\n", s.payload_bits + 16 * s.tensors);
    if (density > 0.0) {
        std::printf("entropy_bits    %.1f\n", entropy_bits(density, s.dim));
    } else {
        std::printf("entropy_bits    16\n");
    }
    std::printf("ratio_vs_16bit  %.3f\n",
                s.payload_bits == 0 ? INFINITY : 16.0 * static_cast<double>(s.dim) / static_cast<double>(s.payload_bits));
}

void cmd_similarity(const std::string & a_path, const std::string & b_path) {
    const auto a = load_compressed(a_path);
    const auto b = load_compressed(b_path);
    if (a.tensors.size() != b.tensors.size()) {
        raise(Errc::DimMismatch, "inputs have different tensor counts");
    }
    double total_dot     = 0.0;
    std::uint64_t hamming = 0;
    double sq_l2         = 0.0;
    for (std::size_t i = 0; i < a.tensors.size(); ++i) {
        if (a.tensors[i].name != b.tensors[i].name) {
            raise(Errc::DimMismatch, "tensor '" + a.tensors[i].name + "' vs '" + b.tensors[i].name + "'");
        }
        const auto ma = BitmaskPair::from_tensor(a.tensors[i]);
        const auto mb = BitmaskPair::from_tensor(b.tensors[i]);
        total_dot += dot(ma, mb);
        hamming += sign_distance(ma, mb);
        const double l2 = scaled_l2_distance(ma, mb);
        sq_l2 += l2 * l2;
    }
    std::printf("dot            %.17g\n", total_dot);
    std::printf("sign_distance  %" PRIu64 "\n", hamming);
    std::printf("scaled_l2      %.17g\n", std::sqrt(sq_l2));
}

void cmd_merge(const std::vector<std::string> & inputs, const MergeSpec & spec, const std::string & out, Dtype dtype) {
    TaskVector merged = [&] {
        if (all_compressed(inputs)) {
            std::vector<CompressedArtifact> artifacts;
            for (const auto & p : inputs) {
                artifacts.push_back(load_compressed(p));
            }
            return merge_compressed(artifacts, spec);
        }
        std::vector<TaskVector> dense;
        for (const auto & p : inputs) {
            dense.push_back(load_dense(p));
        }
        return merge(dense, spec);
    }();
    save_container(merged, dtype, out);
}

std::vector<LowRankModule> load_modules(const std::vector<std::string> & inputs) {
    std::vector<LowRankModule> modules;
    for (const auto & p : inputs) {
        modules.push_back(low_rank_from_task_vector(load_dense(p)));
    }
    return modules;
}

void cmd_compose(const std::vector<std::string> & inputs, const std::string & weights_path, const std::string & out,
                 Dtype dtype) {
    ComposeWeights w{read_weights(weights_path)};
    w.clamp();
    save_container(to_task_vector(compose_modules(load_modules(inputs), w)), dtype, out);
}

void cmd_compose_opt(const std::vector<std::string> & inputs, const std::string & loss_cmd,
                     const OptimizeOptions & options, const std::string & out) {
    const auto modules = load_modules(inputs);
    const LossFn loss  = [&](std::span<const double> w) {
        tools::TempFile input(".json");
        {
            std::ofstream f(input.path());
            f << json(std::vector<double>(w.begin(), w.end())).dump() << '\n';
        }
        const auto r = tools::run_command(loss_cmd + " < " + tools::shell_quote(input.path().string()));
        if (r.exit_code != 0) {
            raise(Errc::IoFailure, "loss command exited with status " + std::to_string(r.exit_code));
        }
        return tools::parse_number(r.output);
    };
    const auto result = optimize_weights(modules, loss, options);
    json j            = {{"weights", result.weights.w},
                         {"loss", result.loss},
                         {"evaluations", result.evaluations},
                         {"restarts", result.restarts}};
    if (out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::ofstream f(out);
        f << j.dump(2) << '\n';
        if (!f) {
            raise(Errc::IoFailure, "cannot write '" + out + "'");
        }
        std::printf("loss %.17g after %zu evaluations\n", result.loss, result.evaluations);
    }
}

void cmd_sweep(const std::string & tau_path, const std::string & scorer_cmd, SweepGrid grid, bool pooled,
               const std::string & out) {
    const TaskVector tau = load_dense(tau_path);
    Scorer scorer;
    if (scorer_cmd.empty()) {
        scorer = reconstruction_scorer(tau);
    } else {
        scorer = [&](const CompressedArtifact & ca) {
            tools::TempFile blob(".cpt");
            write_file(blob.path(), encode_golomb(ca.tensors).bytes);
            const auto r = tools::run_command(scorer_cmd + " " + tools::shell_quote(blob.path().string()));
            if (r.exit_code != 0) {
                raise(Errc::IoFailure, "scorer exited with status " + std::to_string(r.exit_code));
            }
            return tools::parse_number(r.output);
        };
    }
    const auto result = run_sweep(tau, grid, scorer, pooled ? SigmaMode::pooled : SigmaMode::per_group);

    std::ofstream csv(out);
    if (!csv) {
        raise(Errc::IoFailure, "cannot write '" + out + "'");
    }
    csv << "k,alpha,score,size_bits\n";
    char line[160];
    for (const auto & row : result.rows) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%" PRIu64 "\n", row.k_percent, row.alpha, row.score,
                      row.size_bits);
        csv << line;
        if (!row.error.empty()) {
            std::fprintf(stderr, "cell k=%g alpha=%g failed: %s\n", row.k_percent, row.alpha, row.error.c_str());
        }
    }
    const auto & best = result.best_row();
    std::printf("best k=%g alpha=%g score=%.17g size_bits=%" PRIu64 "\n", best.k_percent, best.alpha, best.score,
                best.size_bits);
}

void cmd_bench(const std::string & path, const BenchOptions & options) {
    const auto r = bench_load(path, options);
    std::printf("%-40s %-10s %7s %14s %14s %14s\n", "path", "kind", "trials", "mean_ms", "std_ms", "size_MB");
    std::printf("%-40s %-10s %7zu %14.3f %14.3f %14.3f\n", r.path.c_str(), r.kind.c_str(), r.trials,
                r.mean_sec * 1e3, r.std_sec * 1e3, static_cast<double>(r.size_bits) / 8.0 / 1e6);
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"tvc - sparse ternary task-vector compression"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tvc 0.1.0");

    std::string dtype_name = "f32";

    // inspect
    std::string inspect_path;
    auto * inspect = app.add_subcommand("inspect", "Print a container manifest or artifact header");
    inspect->add_option("path", inspect_path)->required()->check(CLI::ExistingFile);

    // diff
    std::string ft_path, init_path, diff_out;
    auto * diff = app.add_subcommand("diff", "Task vector = fine-tuned - initial");
    diff->add_option("ft", ft_path)->required()->check(CLI::ExistingFile);
    diff->add_option("init", init_path)->required()->check(CLI::ExistingFile);
    diff->add_option("-o,--output", diff_out)->required();
    diff->add_option("--dtype", dtype_name, "f32, f16 or bf16")->capture_default_str();

    // stats
    std::string stats_path;
    auto * stats_cmd = app.add_subcommand("stats", "Mean/std/max/min per group and pooled");
    stats_cmd->add_option("tau", stats_path)->required()->check(CLI::ExistingFile);

    // compress
    std::string compress_in, compress_out;
    double k_percent = 10.0, alpha = 1.0;
    bool pooled_sigma = false;
    auto * compress_cmd = app.add_subcommand("compress", "Sparsify and ternarize a task vector");
    compress_cmd->add_option("tau", compress_in)->required()->check(CLI::ExistingFile);
    compress_cmd->add_option("-k,--density", k_percent, "percent of entries kept per group")->required();
    compress_cmd->add_option("--alpha", alpha, "scale multiplier on sigma")->required();
    compress_cmd->add_flag("--pooled-sigma", pooled_sigma, "one sigma for the whole task vector");
    compress_cmd->add_option("-o,--output", compress_out)->required();

    // decompress
    std::string decompress_in, decompress_out;
    auto * decompress = app.add_subcommand("decompress", "Dense reconstruction of an artifact or blob");
    decompress->add_option("artifact", decompress_in)->required()->check(CLI::ExistingFile);
    decompress->add_option("-o,--output", decompress_out)->required();
    decompress->add_option("--dtype", dtype_name)->capture_default_str();

    // apply
    std::string apply_base, apply_artifact, apply_out;
    auto * apply_cmd = app.add_subcommand("apply", "Add a compressed update to a base checkpoint");
    apply_cmd->add_option("base", apply_base)->required()->check(CLI::ExistingFile);
    apply_cmd->add_option("artifact", apply_artifact)->required()->check(CLI::ExistingFile);
    apply_cmd->add_option("-o,--output", apply_out)->required();
    apply_cmd->add_option("--dtype", dtype_name)->capture_default_str();

    // pack / unpack
    std::string pack_in, pack_out, format_name = "golomb";
    auto * pack = app.add_subcommand("pack", "Encode an artifact as a golomb or bitmask blob");
    pack->add_option("artifact", pack_in)->required()->check(CLI::ExistingFile);
    pack->add_option("--format", format_name)->check(CLI::IsMember({"golomb", "bitmask"}))->capture_default_str();
    pack->add_option("-o,--output", pack_out)->required();

    std::string unpack_in, unpack_out;
    auto * unpack = app.add_subcommand("unpack", "Turn a blob back into an artifact");
    unpack->add_option("blob", unpack_in)->required()->check(CLI::ExistingFile);
    unpack->add_option("-o,--output", unpack_out)->required();

    // size
    std::string size_path;
    auto * size_cmd = app.add_subcommand("size", "Payload bits, entropy bound and ratio vs 16-bit dense");
    size_cmd->add_option("blob", size_path)->required()->check(CLI::ExistingFile);

    // similarity
    std::string sim_a, sim_b;
    auto * similarity = app.add_subcommand("similarity", "Bitwise dot, sign distance and L2 distance");
    similarity->add_option("a", sim_a)->required()->check(CLI::ExistingFile);
    similarity->add_option("b", sim_b)->required()->check(CLI::ExistingFile);

    // merge
    std::vector<std::string> merge_inputs;
    std::string merge_method = "task-arithmetic", merge_out;
    MergeSpec merge_spec;
    auto * merge_cmd = app.add_subcommand("merge", "Merge task vectors (average, task-arithmetic, ties)");
    merge_cmd->add_option("--method", merge_method)
        ->check(CLI::IsMember({"average", "task-arithmetic", "ties"}))
        ->capture_default_str();
    merge_cmd->add_option("--lambda", merge_spec.lambda)->capture_default_str();
    merge_cmd->add_option("--trim", merge_spec.trim_density, "ties trim density in percent")->capture_default_str();
    merge_cmd->add_option("inputs", merge_inputs)->required()->check(CLI::ExistingFile);
    merge_cmd->add_option("-o,--output", merge_out)->required();
    merge_cmd->add_option("--dtype", dtype_name)->capture_default_str();

    // compose
    std::vector<std::string> compose_inputs;
    std::string weights_path, compose_out;
    auto * compose = app.add_subcommand("compose", "Weighted composition of low-rank modules");
    compose->add_option("--weights", weights_path, "JSON array, or object with a \"weights\" array")
        ->required()
        ->check(CLI::ExistingFile);
    compose->add_option("modules", compose_inputs)->required()->check(CLI::ExistingFile);
    compose->add_option("-o,--output", compose_out)->required();
    compose->add_option("--dtype", dtype_name)->capture_default_str();

    // compose-opt
    std::vector<std::string> opt_inputs;
    std::string loss_cmd, opt_out;
    OptimizeOptions opt;
    auto * compose_opt = app.add_subcommand("compose-opt", "Search composition weights against an external loss");
    compose_opt->add_option("--budget", opt.budget)->capture_default_str();
    compose_opt->add_option("--seed", opt.seed)->capture_default_str();
    compose_opt->add_option("--lo", opt.lo)->capture_default_str();
    compose_opt->add_option("--hi", opt.hi)->capture_default_str();
    compose_opt->add_option("--loss-cmd", loss_cmd, "reads a JSON weight array on stdin, prints the loss")
        ->required();
    compose_opt->add_option("modules", opt_inputs)->required()->check(CLI::ExistingFile);
    compose_opt->add_option("-o,--output", opt_out, "write weights JSON here instead of stdout");

    // sweep
    std::string sweep_in, scorer_cmd, sweep_out;
    SweepGrid grid;
    bool sweep_pooled = false;
    auto * sweep = app.add_subcommand("sweep", "Grid search over (k, alpha)");
    sweep->add_option("tau", sweep_in)->required()->check(CLI::ExistingFile);
    sweep->add_option("--scorer-cmd", scorer_cmd,
                      "invoked with the packed blob path appended; prints a score (higher is better). "
                      "Defaults to negative reconstruction error");
    sweep->add_option("--k", grid.k_values)->delimiter(',')->capture_default_str();
    sweep->add_option("--alpha", grid.alpha_values)->delimiter(',')->capture_default_str();
    sweep->add_flag("--pooled-sigma", sweep_pooled);
    sweep->add_option("-o,--output", sweep_out)->required();

    // recommend-alpha
    double model_params = 0.0, rec_k = 0.0;
    auto * recommend = app.add_subcommand("recommend-alpha", "Whether a fixed alpha is safe without a sweep");
    recommend->add_option("--params", model_params, "base model parameter count")->required();
    recommend->add_option("-k,--density", rec_k)->required();

    // bench
    std::string bench_path;
    BenchOptions bench_opts;
    auto * bench = app.add_subcommand("bench", "Time loading (and decoding) a file");
    bench->add_option("path", bench_path)->required()->check(CLI::ExistingFile);
    bench->add_option("--trials", bench_opts.trials)->capture_default_str();
    bench->add_flag("--read-only", bench_opts.read_only, "skip decoding");
    bench->add_flag("--drop-caches", bench_opts.drop_caches, "evict the file from the page cache before each trial");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*inspect) {
            cmd_inspect(inspect_path);
        } else if (*diff) {
            save_container(task_vector(load_dense(ft_path), load_dense(init_path)), dtype_arg(dtype_name), diff_out);
        } else if (*stats_cmd) {
            cmd_stats(stats_path);
        } else if (*compress_cmd) {
            const auto ca = compress(load_dense(compress_in), k_percent, alpha,
                                     pooled_sigma ? SigmaMode::pooled : SigmaMode::per_group);
            save_artifact(ca, compress_out);
            std::printf("%" PRIu64 " of %" PRIu64 " entries kept\n", ca.nonzeros(), ca.dim());
        } else if (*decompress) {
            save_container(load_dense(decompress_in), dtype_arg(dtype_name), decompress_out);
        } else if (*apply_cmd) {
            save_container(apply(load_dense(apply_base), load_compressed(apply_artifact)), dtype_arg(dtype_name),
                           apply_out);
        } else if (*pack) {
            const auto format = format_name == "bitmask" ? BlobFormat::bitmask : BlobFormat::golomb;
            write_file(pack_out, encode(load_compressed(pack_in).tensors, format).bytes);
        } else if (*unpack) {
            save_artifact(load_compressed(unpack_in), unpack_out);
        } else if (*size_cmd) {
            cmd_size(size_path);
        } else if (*similarity) {
            cmd_similarity(sim_a, sim_b);
        } else if (*merge_cmd) {
            merge_spec.method = *parse_merge_method(merge_method);
            cmd_merge(merge_inputs, merge_spec, merge_out, dtype_arg(dtype_name));
        } else if (*compose) {
            cmd_compose(compose_inputs, weights_path, compose_out, dtype_arg(dtype_name));
        } else if (*compose_opt) {
            cmd_compose_opt(opt_inputs, loss_cmd, opt, opt_out);
        } else if (*sweep) {
            cmd_sweep(sweep_in, scorer_cmd, grid, sweep_pooled, sweep_out);
        } else if (*recommend) {
            if (!(model_params >= 1.0)) {
                raise(Errc::InvalidArgument, "--params must be positive");
            }
            const auto a = recommend_alpha(static_cast<std::uint64_t>(model_params), rec_k);
            if (a) {
                std::printf("alpha %g\n", *a);
            } else {
                std::printf("sweep required\n");
            }
        } else if (*bench) {
            cmd_bench(bench_path, bench_opts);
        }
    } catch (const tvc::Error & e) {
        std::fprintf(stderr, "tvc: %s\n", e.what());
        return 2;
    } catch (const std::exception & e) {
        std::fprintf(stderr, "tvc: %s\n", e.what());
        return 1;
    }
    return 0;
}
