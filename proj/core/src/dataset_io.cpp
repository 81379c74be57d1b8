#include "cvdx/dataset_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cvdx/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cvdx::io {

namespace {

json nuisance_to_json(const world::NuisanceSample& n) {
    return json{{"brightness", n.brightness}, {"dx", n.dx},       {"dy", n.dy},
                {"channel_gain", n.channel_gain}, {"glare_amp", n.glare_amp},
                {"glare_x", n.glare_x},           {"glare_y", n.glare_y},
                {"glare_sigma", n.glare_sigma}};
}

world::NuisanceSample nuisance_from_json(const json& j) {
    world::NuisanceSample n;
    n.brightness = j.at("brightness").get<double>();
    n.dx = j.at("dx").get<int>();
    n.dy = j.at("dy").get<int>();
    auto g = j.at("channel_gain").get<std::vector<double>>();
    for (size_t i = 0; i < 3 && i < g.size(); ++i) n.channel_gain[i] = g[i];
    n.glare_amp = j.value("glare_amp", 0.0);
    n.glare_x = j.value("glare_x", 0.0);
    n.glare_y = j.value("glare_y", 0.0);
    n.glare_sigma = j.value("glare_sigma", 1.0);
    return n;
}

}  // namespace

std::string persist_dataset(const std::vector<world::VideoRecord>& records,
                            const std::string& directory) {
    fs::path dir(directory);
    fs::create_directories(dir / "cases");

    std::ofstream manifest(dir / "manifest.jsonl");
    if (!manifest) throw LoadError("persist_dataset: cannot write to " + directory);

    for (const auto& rec : records) {
        const std::string rel = "cases/" + rec.case_id + ".f32";
        {
            std::ofstream f(dir / rel, std::ios::binary);
            f.write(reinterpret_cast<const char*>(rec.frames.data()),
                    static_cast<std::streamsize>(rec.frames.size() * sizeof(float)));
        }
        json hdr;
        hdr["shape"] = {rec.frames_total(), rec.channels, rec.image_size, rec.image_size};
        hdr["dtype"] = "f32le";
        hdr["stage_ids"] = rec.stage_ids;
        json trace = json::array();
        for (const auto& n : rec.nuisance_trace) trace.push_back(nuisance_to_json(n));
        hdr["nuisance_trace"] = trace;
        {
            std::ofstream f(dir / ("cases/" + rec.case_id + ".hdr.json"));
            f << hdr.dump(2) << "\n";
        }
        json row;
        row["case_id"] = rec.case_id;
        row["seed"] = rec.seed;
        row["health"] = world::health_name(rec.health);
        row["labels"] = rec.labels;
        row["path"] = rel;
        manifest << row.dump() << "\n";
    }
    return (dir / "manifest.jsonl").string();
}

std::vector<world::VideoRecord> load_dataset(const std::string& directory) {
    fs::path dir(directory);
    std::ifstream manifest(dir / "manifest.jsonl");
    if (!manifest) throw LoadError("load_dataset: missing manifest " +
                                   (dir / "manifest.jsonl").string());

    std::vector<world::VideoRecord> out;
    std::string line;
    int row_index = 0;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            throw LoadError("load_dataset: malformed manifest row " + std::to_string(row_index) +
                            ": " + e.what());
        }
        world::VideoRecord rec;
        try {
            rec.case_id = row.at("case_id").get<std::string>();
            rec.seed = row.at("seed").get<uint64_t>();
            rec.health = world::health_from_name(row.at("health").get<std::string>());
            rec.labels = row.at("labels").get<std::vector<uint8_t>>();
        } catch (const json::exception& e) {
            throw LoadError("load_dataset: manifest row " + std::to_string(row_index) +
                            " missing field: " + e.what());
        }
        const std::string rel = row.at("path").get<std::string>();
        fs::path fpath = dir / rel;
        if (!fs::exists(fpath))
            throw LoadError("load_dataset: manifest row " + std::to_string(row_index) +
                            " references missing file " + fpath.string());

        fs::path hpath = dir / (rel.substr(0, rel.size() - 4) + ".hdr.json");
        std::ifstream hf(hpath);
        if (!hf)
            throw LoadError("load_dataset: missing header " + hpath.string() + " for row " +
                            std::to_string(row_index));
        json hdr;
        try {
            hf >> hdr;
            auto shape = hdr.at("shape").get<std::vector<int>>();
            if (shape.size() != 4 || hdr.at("dtype").get<std::string>() != "f32le")
                throw LoadError("load_dataset: bad header " + hpath.string());
            rec.stage_ids = hdr.at("stage_ids").get<std::vector<int>>();
            rec.channels = shape[1];
            rec.image_size = shape[2];
            if (shape[3] != shape[2] || shape[0] != static_cast<int>(rec.stage_ids.size()))
                throw LoadError("load_dataset: inconsistent header " + hpath.string());
            for (const auto& nj : hdr.at("nuisance_trace"))
                rec.nuisance_trace.push_back(nuisance_from_json(nj));
            int64_t count = static_cast<int64_t>(shape[0]) * shape[1] * shape[2] * shape[3];
            std::ifstream f(fpath, std::ios::binary);
            rec.frames.resize(static_cast<size_t>(count));
            f.read(reinterpret_cast<char*>(rec.frames.data()),
                   static_cast<std::streamsize>(count * sizeof(float)));
            if (f.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
                throw LoadError("load_dataset: truncated frame file " + fpath.string());
        } catch (const json::exception& e) {
            throw LoadError("load_dataset: corrupt header " + hpath.string() + ": " + e.what());
        }
        out.push_back(std::move(rec));
        ++row_index;
    }
    return out;
}

}  // namespace cvdx::io
