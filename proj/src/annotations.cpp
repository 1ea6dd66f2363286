#include "cpn/annotations.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cpn {

std::vector<ImageAnnotations> load_annotations(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_annotations: cannot open " + path);

    std::vector<ImageAnnotations> records;
    std::map<std::string, std::size_t> index;  // image_file -> records slot
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        if (trimmed.empty() || trimmed[0] == '#') continue;

        std::istringstream ss(line);
        std::string file;
        float x, y, w, h;
        if (!(ss >> file >> x >> y >> w >> h)) {
            throw std::runtime_error("load_annotations: malformed line " +
                                     std::to_string(line_no) + " in " + path + ": '" + line +
                                     "'");
        }
        std::string label;
        std::getline(ss, label);
        label.erase(0, label.find_first_not_of(" \t"));

        auto [it, inserted] = index.try_emplace(file, records.size());
        if (inserted) records.push_back({file, {}});
        records[it->second].boxes.push_back({BBox{x, y, w, h}, label});
    }
    return records;
}

void save_annotations(const std::string& path, const std::vector<ImageAnnotations>& records) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_annotations: cannot open " + path + " for writing");
    for (const auto& rec : records) {
        for (const auto& b : rec.boxes) {
            os << rec.image_file << ' ' << b.box.x << ' ' << b.box.y << ' ' << b.box.w << ' '
               << b.box.h;
            if (!b.label.empty()) os << ' ' << b.label;
            os << '\n';
        }
    }
}

GroundTruth annotations_to_ground_truth(const std::vector<ImageAnnotations>& records) {
    GroundTruth truth;
    for (const auto& rec : records) {
        auto& boxes = truth[rec.image_file];
        for (const auto& b : rec.boxes) boxes.push_back(b.box);
    }
    return truth;
}

AnnotatedImage load_annotated_image(const std::string& dir, const ImageAnnotations& record,
                                    std::ostream* warnings) {
    AnnotatedImage out;
    out.id = record.image_file;
    std::string path = dir.empty() ? record.image_file : dir + "/" + record.image_file;
    out.image = read_png(path);
    out.boxes = record.boxes;
    for (auto& b : out.boxes) {
        BBox orig = b.box;
        float x1 = std::clamp(b.box.x, 0.f, static_cast<float>(out.image.width));
        float y1 = std::clamp(b.box.y, 0.f, static_cast<float>(out.image.height));
        float x2 = std::clamp(b.box.x + b.box.w, 0.f, static_cast<float>(out.image.width));
        float y2 = std::clamp(b.box.y + b.box.h, 0.f, static_cast<float>(out.image.height));
        b.box = {x1, y1, x2 - x1, y2 - y1};
        if ((b.box.x != orig.x || b.box.y != orig.y || b.box.w != orig.w || b.box.h != orig.h) &&
            warnings) {
            *warnings << "load_annotated_image: clamped box (" << orig.x << "," << orig.y << ","
                      << orig.w << "," << orig.h << ") to image bounds in " << record.image_file
                      << "\n";
        }
    }
    return out;
}

void save_proposals_csv(const std::string& path, const ProposalSet& proposals) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("save_proposals_csv: cannot open " + path);
    std::fprintf(f, "image_id,x,y,w,h,score,template,scale\n");
    for (const auto& [id, props] : proposals) {
        for (const auto& p : props) {
            std::fprintf(f, "%s,%.3f,%.3f,%.3f,%.3f,%.6f,%d,%g\n", id.c_str(), p.box.x, p.box.y,
                         p.box.w, p.box.h, p.score, p.template_id, p.scale);
        }
    }
    std::fclose(f);
}

ProposalSet load_proposals_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_proposals_csv: cannot open " + path);
    ProposalSet out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("image_id,", 0) == 0) continue;  // header

        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 6) {
            throw std::runtime_error("load_proposals_csv: malformed line " +
                                     std::to_string(line_no) + " in " + path);
        }
        try {
            Proposal p;
            p.box = {std::stof(fields[1]), std::stof(fields[2]), std::stof(fields[3]),
                     std::stof(fields[4])};
            p.score = std::stof(fields[5]);
            p.template_id = fields.size() > 6 ? std::stoi(fields[6]) : 0;
            p.scale = fields.size() > 7 ? std::stof(fields[7]) : 1.f;
            out[fields[0]].push_back(p);
        } catch (const std::exception&) {
            throw std::runtime_error("load_proposals_csv: malformed line " +
                                     std::to_string(line_no) + " in " + path);
        }
    }
    return out;
}

}  // namespace cpn
