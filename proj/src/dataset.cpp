#include "cpn/dataset.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

#include "cpn/parallel.hpp"

namespace cpn {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<TrainingSample> build_dataset(const std::vector<AnnotatedImage>& images,
                                          const TemplateSet& templates, int r_w, int r_h,
                                          const DatasetConfig& config, std::ostream* warnings) {
    std::vector<std::vector<TrainingSample>> per_image(images.size());
    std::mutex warn_mutex;

    parallel_for(static_cast<int>(images.size()), [&](int i) {
        const AnnotatedImage& img = images[i];
        std::vector<BBox> truths;
        truths.reserve(img.boxes.size());
        for (const auto& b : img.boxes) truths.push_back(b.box);

        std::ostringstream local_warnings;
        std::ostream* wp = warnings ? &local_warnings : nullptr;
        std::uint64_t pos_seed = derive_seed(config.seed, 2 * static_cast<std::uint64_t>(i));
        std::uint64_t neg_seed = derive_seed(config.seed, 2 * static_cast<std::uint64_t>(i) + 1);

        auto samples = sample_positives(img.image, truths, templates, r_w, r_h, config.sampler,
                                        pos_seed, wp);
        int neg_count = static_cast<int>(
            std::lround(config.neg_per_positive * static_cast<double>(samples.size())));
        if (!truths.empty() && neg_count < 1) neg_count = 1;
        auto negs = sample_negatives(img.image, truths, templates, r_w, r_h, neg_count,
                                     config.sampler, neg_seed, wp);
        samples.insert(samples.end(), std::make_move_iterator(negs.begin()),
                       std::make_move_iterator(negs.end()));
        per_image[i] = std::move(samples);

        if (warnings) {
            std::string w = local_warnings.str();
            if (!w.empty()) {
                std::lock_guard<std::mutex> lock(warn_mutex);
                *warnings << "[" << img.id << "] " << w;
            }
        }
    });

    std::vector<TrainingSample> dataset;
    for (auto& v : per_image) {
        dataset.insert(dataset.end(), std::make_move_iterator(v.begin()),
                       std::make_move_iterator(v.end()));
    }
    return dataset;
}

}  // namespace cpn
