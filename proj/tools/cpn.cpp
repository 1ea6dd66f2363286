// Command-line surface for the character proposal network: dataset
// synthesis, training, inference, evaluation and model inspection.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpn/annotations.hpp"
#include "cpn/dataset.hpp"
#include "cpn/evaluation.hpp"
#include "cpn/inference.hpp"
#include "cpn/network.hpp"
#include "cpn/parallel.hpp"
#include "cpn/serialize.hpp"
#include "cpn/synth.hpp"
#include "cpn/training.hpp"

namespace fs = std::filesystem;

namespace {

void write_effective_config(CLI::App* sub, const std::string& path) {
    std::ofstream os(path);
    if (os) os << sub->config_to_str(true, false);
}

cpn::TemplateSizeMode parse_template_mode(const std::string& mode) {
    if (mode == "aspect") return cpn::TemplateSizeMode::aspect;
    if (mode == "eq3-literal") return cpn::TemplateSizeMode::eq3_literal;
    throw CLI::ValidationError("--template-mode must be 'aspect' or 'eq3-literal'");
}

cpn::ArchitectureSpec resolve_arch(const std::string& arch, int input_size, int k) {
    if (arch == "CPN-ENG" || arch == "CPN-CHS") return cpn::builtin_spec(arch, k);
    return cpn::parse_arch(arch, input_size, input_size, k);
}

std::vector<cpn::AnnotatedImage> load_dataset_images(const std::string& data_dir) {
    auto records = cpn::load_annotations(data_dir + "/annotations.txt");
    std::vector<cpn::AnnotatedImage> images(records.size());
    cpn::parallel_for(static_cast<int>(records.size()), [&](int i) {
        images[i] = cpn::load_annotated_image(data_dir, records[i], nullptr);
    });
    return images;
}

std::uint64_t fnv1a(const unsigned char* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 1099511628211ULL;
    }
    return h;
}

struct SynthArgs {
    std::string out;
    int count = 100;
    cpn::SynthConfig cfg;
    bool no_texture = false;
    bool no_illumination = false;
};

int run_synth(CLI::App* sub, SynthArgs& a) {
    a.cfg.textured_background = !a.no_texture;
    a.cfg.illumination_gradient = !a.no_illumination;
    cpn::synth_generate(a.cfg, a.count, a.out);
    write_effective_config(sub, a.out + "/effective_config.txt");
    std::cout << "wrote " << a.count << " scenes to " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string out;
    std::string arch = "CPN-ENG";
    int input_size = 29;
    int k = 4;
    std::string template_mode = "aspect";
    double init_std = 0.01;
    float neg_per_positive = 1.0f;
    cpn::TrainConfig cfg;
};

int run_train(CLI::App* sub, TrainArgs& a) {
    fs::create_directories(a.out);
    auto images = load_dataset_images(a.data);

    std::vector<cpn::BBox> all_truths;
    for (const auto& img : images) {
        for (const auto& b : img.boxes) all_truths.push_back(b.box);
    }
    cpn::ArchitectureSpec spec = resolve_arch(a.arch, a.input_size, a.k);
    cpn::TemplateSet templates = cpn::cluster_templates(
        all_truths, a.k, spec.input_w, spec.input_h, parse_template_mode(a.template_mode));

    auto model = cpn::init_model<float>(spec, templates, a.cfg.seed, a.init_std);
    cpn::save_model(model, a.out + "/model_init.cpnm");

    cpn::DatasetConfig dcfg;
    dcfg.sampler.shift_count = a.cfg.shift_count;
    dcfg.sampler.max_offset = a.cfg.max_offset;
    dcfg.neg_per_positive = a.neg_per_positive;
    dcfg.seed = cpn::derive_seed(a.cfg.seed, 0xda7a);
    auto dataset = cpn::build_dataset(images, templates, spec.input_w, spec.input_h, dcfg,
                                      &std::cerr);
    std::size_t positives = 0;
    for (const auto& s : dataset) positives += s.positive ? 1 : 0;
    std::cout << "dataset: " << dataset.size() << " samples (" << positives << " positive) from "
              << images.size() << " images\n";

    std::ofstream log(a.out + "/train_log.csv");
    cpn::train(dataset, a.cfg, model, &log);

    model.metadata.emplace_back("alpha", std::to_string(a.cfg.alpha));
    model.metadata.emplace_back("weight_decay", std::to_string(a.cfg.weight_decay));
    model.metadata.emplace_back("learning_rate", std::to_string(a.cfg.learning_rate));
    model.metadata.emplace_back("iterations", std::to_string(a.cfg.iterations));
    model.metadata.emplace_back("batch_size", std::to_string(a.cfg.batch_size));
    model.metadata.emplace_back("shift_count", std::to_string(a.cfg.shift_count));
    model.metadata.emplace_back("max_offset", std::to_string(a.cfg.max_offset));
    model.metadata.emplace_back("template_mode", a.template_mode);
    cpn::save_model(model, a.out + "/model.cpnm");
    write_effective_config(sub, a.out + "/effective_config.txt");
    std::cout << "model written to " << a.out << "/model.cpnm\n";
    return 0;
}

struct InferArgs {
    std::string model;
    std::string data;
    std::vector<std::string> images;
    std::string out = "proposals.csv";
    cpn::PyramidConfig cfg;
};

int run_infer(CLI::App* sub, InferArgs& a) {
    cpn::Model<float> model = cpn::load_model(a.model);

    std::vector<std::string> ids;
    std::vector<std::string> paths;
    if (!a.data.empty()) {
        auto records = cpn::load_annotations(a.data + "/annotations.txt");
        for (const auto& r : records) {
            ids.push_back(r.image_file);
            paths.push_back(a.data + "/" + r.image_file);
        }
    }
    for (const auto& p : a.images) {
        ids.push_back(fs::path(p).filename().string());
        paths.push_back(p);
    }
    if (paths.empty()) throw CLI::ValidationError("infer: no images (use --data or --image)");

    std::vector<std::vector<cpn::Proposal>> results(paths.size());
    cpn::parallel_for(static_cast<int>(paths.size()), [&](int i) {
        cpn::ImageU8 img = cpn::read_png(paths[i]);
        results[i] = cpn::generate_proposals(model, img, a.cfg, nullptr);
    });

    cpn::ProposalSet out;
    for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = std::move(results[i]);
    cpn::save_proposals_csv(a.out, out);
    write_effective_config(sub, a.out + ".config.txt");
    std::size_t total = 0;
    for (const auto& [_, v] : out) total += v.size();
    std::cout << "wrote " << total << " proposals for " << ids.size() << " images to " << a.out
              << "\n";
    return 0;
}

struct EvalArgs {
    std::string proposals;
    std::string data;
    double iou = 0.5;
    long top_n = 500;
    std::string curves;
    cpn::CurveConfig curve_cfg;
};

int run_eval(CLI::App* sub, EvalArgs& a) {
    cpn::ProposalSet proposals = cpn::load_proposals_csv(a.proposals);
    cpn::GroundTruth truths =
        cpn::annotations_to_ground_truth(cpn::load_annotations(a.data + "/annotations.txt"));

    cpn::EvalResult r = cpn::recall(proposals, truths, a.iou, a.top_n);
    std::printf("recall: %.6f (matched %ld/%ld, iou>%.2f, top %ld)\n", r.recall, r.matched,
                r.total, a.iou, a.top_n);
    if (!a.curves.empty()) {
        auto points = cpn::recall_curves(proposals, truths, a.curve_cfg);
        cpn::write_curves_csv(a.curves, points);
        write_effective_config(sub, a.curves + ".config.txt");
        std::cout << "curves written to " << a.curves << "\n";
    }
    return 0;
}

int run_inspect(const std::string& path) {
    cpn::Model<float> model = cpn::load_model(path);
    const auto& spec = model.spec;
    std::cout << "model: " << path << "\n";
    std::cout << "architecture: " << spec.name << "\n";
    std::cout << "receptive field: " << spec.input_w << "x" << spec.input_h << "\n";
    std::cout << "stride: " << model.stride << "\n";
    std::cout << "classes (K): " << spec.num_classes << " (" << spec.num_classes - 1
              << " templates + background)\n";

    std::cout << "layers:\n";
    std::size_t conv_idx = 0;
    std::size_t param_count = 0;
    for (const auto& l : spec.layers) {
        if (const auto* c = std::get_if<cpn::ConvDesc>(&l)) {
            const auto& p = model.params[conv_idx++];
            std::size_t n = p.kernels.size() + p.bias.size();
            param_count += n;
            std::printf("  conv %4d x %dx%d stride %d  (%zu params)\n", c->out_channels,
                        c->kernel, c->kernel, c->stride, n);
        } else {
            const auto& pl = std::get<cpn::PoolDesc>(l);
            std::printf("  pool %dx%d stride %d\n", pl.window, pl.window, pl.stride);
        }
    }
    std::cout << "total parameters: " << param_count << "\n";

    std::cout << "shape trace (" << spec.input_h << " -> 1): ";
    auto trace = cpn::shape_trace(spec, spec.input_h);
    for (std::size_t i = 0; i < trace.size(); ++i) std::cout << (i ? "," : "") << trace[i];
    std::cout << "\n";

    std::cout << "templates:\n";
    for (std::size_t i = 0; i < model.templates.aspect_ratios.size(); ++i) {
        std::printf("  class %zu: ratio %.4f, size %.2fx%.2f\n", i + 1,
                    model.templates.aspect_ratios[i], model.templates.sizes[i].first,
                    model.templates.sizes[i].second);
    }
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& p : model.params) {
        h = fnv1a(reinterpret_cast<const unsigned char*>(p.kernels.data.data()),
                  p.kernels.size() * sizeof(float), h);
        h = fnv1a(reinterpret_cast<const unsigned char*>(p.bias.data()),
                  static_cast<std::size_t>(p.bias.size()) * sizeof(float), h);
    }
    std::printf("param checksum: %016llx\n", static_cast<unsigned long long>(h));
    if (!model.metadata.empty()) {
        std::cout << "metadata:\n";
        for (const auto& [k, v] : model.metadata) std::cout << "  " << k << " = " << v << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"character proposal network toolkit"};
    app.require_subcommand(1);

    SynthArgs synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic glyph-scene dataset");
    synth_cmd->add_option("--out", synth.out, "output directory")->required();
    synth_cmd->add_option("--count", synth.count, "number of scenes");
    synth_cmd->add_option("--seed", synth.cfg.seed, "master seed");
    synth_cmd->add_option("--image-min", synth.cfg.min_image, "minimum image side");
    synth_cmd->add_option("--image-max", synth.cfg.max_image, "maximum image side");
    synth_cmd->add_option("--glyphs-min", synth.cfg.min_glyphs, "minimum glyphs per scene");
    synth_cmd->add_option("--glyphs-max", synth.cfg.max_glyphs, "maximum glyphs per scene");
    synth_cmd->add_option("--glyph-min", synth.cfg.min_glyph, "minimum glyph longer side");
    synth_cmd->add_option("--glyph-max", synth.cfg.max_glyph, "maximum glyph longer side");
    synth_cmd->add_option("--aspect-ratios", synth.cfg.aspect_ratios, "aspect mixture centers");
    synth_cmd->add_option("--aspect-weights", synth.cfg.aspect_weights, "aspect mixture weights");
    synth_cmd->add_option("--aspect-jitter", synth.cfg.aspect_jitter, "log-ratio jitter bound");
    synth_cmd->add_flag("--no-texture", synth.no_texture, "plain backgrounds");
    synth_cmd->add_flag("--no-illumination", synth.no_illumination, "uniform lighting");
    synth_cmd->add_option("--touching-prob", synth.cfg.touching_pair_prob,
                          "probability of a touching glyph pair");
    synth_cmd->add_option("--broken-prob", synth.cfg.broken_glyph_prob,
                          "probability of a split glyph");
    synth_cmd->set_config("--config");

    TrainArgs train;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model on an annotated dataset");
    train_cmd->add_option("--data", train.data, "dataset directory (annotations.txt + images)")
        ->required();
    train_cmd->add_option("--out", train.out, "output directory")->required();
    train_cmd->add_option("--arch", train.arch,
                          "CPN-ENG, CPN-CHS, or a layer string like 8C5S1-P3S2-...");
    train_cmd->add_option("--input-size", train.input_size,
                          "receptive field for custom layer strings");
    train_cmd->add_option("--k", train.k, "class count K (templates + background)");
    train_cmd->add_option("--template-mode", train.template_mode, "aspect | eq3-literal");
    train_cmd->add_option("--iters", train.cfg.iterations, "SGD iterations");
    train_cmd->add_option("--batch", train.cfg.batch_size, "minibatch size");
    train_cmd->add_option("--lr", train.cfg.learning_rate, "learning rate");
    train_cmd->add_option("--lr-decay", train.cfg.lr_decay, "step decay factor");
    train_cmd->add_option("--lr-decay-every", train.cfg.lr_decay_every,
                          "iterations between decays (0 = constant)");
    train_cmd->add_option("--alpha", train.cfg.alpha, "classification/regression balance");
    train_cmd->add_option("--weight-decay", train.cfg.weight_decay, "L2 penalty on kernels");
    train_cmd->add_option("--seed", train.cfg.seed, "training seed");
    train_cmd->add_option("--init-std", train.init_std, "weight init standard deviation");
    train_cmd->add_option("--shift-count", train.cfg.shift_count, "jittered copies per truth");
    train_cmd->add_option("--max-offset", train.cfg.max_offset, "jitter bound, box fraction");
    train_cmd->add_option("--neg-per-positive", train.neg_per_positive,
                          "negatives per kept positive");
    train_cmd->set_config("--config");

    InferArgs infer;
    CLI::App* infer_cmd = app.add_subcommand("infer", "generate proposals for images");
    infer_cmd->add_option("--model", infer.model, "model file")->required();
    infer_cmd->add_option("--data", infer.data, "dataset directory (uses its annotations.txt)");
    infer_cmd->add_option("--image", infer.images, "individual image file (repeatable)");
    infer_cmd->add_option("--out", infer.out, "proposal CSV path");
    infer_cmd->add_option("--threshold", infer.cfg.score_threshold, "characterness floor");
    infer_cmd->add_option("--nms-iou", infer.cfg.nms_iou, "NMS IoU threshold");
    infer_cmd->add_option("--max-proposals", infer.cfg.max_proposals, "proposal cap per image");
    infer_cmd->add_option("--ratio", infer.cfg.ratio, "pyramid step factor in (0,1)");
    infer_cmd->add_option("--min-scale", infer.cfg.min_scale, "smallest pyramid scale");
    infer_cmd->add_option("--max-scale", infer.cfg.max_scale, "largest pyramid scale");
    infer_cmd->set_config("--config");

    EvalArgs eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "recall of a proposal CSV against a dataset");
    eval_cmd->add_option("--proposals", eval.proposals, "proposal CSV")->required();
    eval_cmd->add_option("--data", eval.data, "dataset directory (annotations.txt)")->required();
    eval_cmd->add_option("--iou", eval.iou, "IoU threshold");
    eval_cmd->add_option("--top-n", eval.top_n, "proposal budget per image");
    eval_cmd->add_option("--curves", eval.curves, "also write recall curves CSV here");
    eval_cmd->add_option("--curve-iou", eval.curve_cfg.fixed_iou,
                         "fixed IoU for the proposal-count sweep");
    eval_cmd->add_option("--curve-top-n", eval.curve_cfg.fixed_top_n,
                         "fixed budget for the IoU sweep");
    eval_cmd->set_config("--config");

    std::string inspect_model;
    CLI::App* inspect_cmd = app.add_subcommand("inspect", "print a model file's structure");
    inspect_cmd->add_option("--model", inspect_model, "model file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) return run_synth(synth_cmd, synth);
        if (train_cmd->parsed()) return run_train(train_cmd, train);
        if (infer_cmd->parsed()) return run_infer(infer_cmd, infer);
        if (eval_cmd->parsed()) return run_eval(eval_cmd, eval);
        if (inspect_cmd->parsed()) return run_inspect(inspect_model);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
