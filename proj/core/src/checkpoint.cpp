#include "cvdx/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "cvdx/errors.hpp"

using nlohmann::json;

namespace cvdx::io {

namespace {
constexpr char kMagic[8] = {'C', 'V', 'D', 'X', 'C', 'K', 'P', 'T'};

using NamedVars = std::vector<std::pair<std::string, ag::Var>>;

void write_file(const std::string& path, const CheckpointMeta& meta, const NamedVars& vars) {
    json hdr;
    hdr["schema_version"] = meta.schema_version;
    hdr["kind"] = meta.kind;
    hdr["model"] = meta.fields;
    json dir = json::array();
    for (const auto& [name, var] : vars) {
        json entry;
        entry["name"] = name;
        entry["shape"] = var->val.shape();
        entry["dtype"] = "f32le";
        dir.push_back(entry);
    }
    hdr["arrays"] = dir;
    std::string hs = hdr.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw LoadError("save_checkpoint: cannot open " + path);
    f.write(kMagic, 8);
    uint32_t hlen = static_cast<uint32_t>(hs.size());
    f.write(reinterpret_cast<const char*>(&hlen), 4);
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    std::vector<float> buf;
    for (const auto& [name, var] : vars) {
        buf.resize(static_cast<size_t>(var->val.numel()));
        for (int64_t i = 0; i < var->val.numel(); ++i) buf[i] = static_cast<float>(var->val[i]);
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
}

CheckpointMeta read_header(std::ifstream& f, const std::string& path, json& hdr_out) {
    char magic[8];
    f.read(magic, 8);
    if (f.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw LoadError("checkpoint: bad magic in " + path);
    uint32_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 4);
    std::string hs(hlen, '\0');
    f.read(hs.data(), hlen);
    if (f.gcount() != static_cast<std::streamsize>(hlen))
        throw LoadError("checkpoint: truncated header in " + path);
    try {
        hdr_out = json::parse(hs);
    } catch (const json::exception& e) {
        throw LoadError("checkpoint: corrupt header in " + path + ": " + e.what());
    }
    CheckpointMeta meta;
    meta.schema_version = hdr_out.at("schema_version").get<int>();
    meta.kind = hdr_out.value("kind", "");
    if (hdr_out.contains("model"))
        meta.fields = hdr_out.at("model").get<std::map<std::string, double>>();
    return meta;
}

CheckpointMeta read_file(const std::string& path, const NamedVars& vars) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw LoadError("load_checkpoint: cannot open " + path);
    json hdr;
    CheckpointMeta meta = read_header(f, path, hdr);

    const auto& dir = hdr.at("arrays");
    if (dir.size() != vars.size())
        throw LoadError("load_checkpoint: parameter count mismatch in " + path);
    std::vector<float> buf;
    for (size_t i = 0; i < dir.size(); ++i) {
        const auto& entry = dir[i];
        const auto& [name, var] = vars[i];
        if (entry.at("name").get<std::string>() != name)
            throw LoadError("load_checkpoint: parameter name mismatch at index " +
                            std::to_string(i) + " in " + path + " (want " + name + ")");
        auto shape = entry.at("shape").get<std::vector<int>>();
        if (shape != var->val.shape())
            throw LoadError("load_checkpoint: shape mismatch for " + name + " in " + path);
        buf.resize(static_cast<size_t>(var->val.numel()));
        f.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (f.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
            throw LoadError("load_checkpoint: truncated array " + name + " in " + path);
        for (int64_t j = 0; j < var->val.numel(); ++j) var->val[j] = static_cast<double>(buf[j]);
    }
    return meta;
}
}  // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const nn::ParamStore& params) {
    write_file(path, meta, params.named());
}

CheckpointMeta load_checkpoint(const std::string& path, nn::ParamStore& params) {
    return read_file(path, params.named());
}

CheckpointMeta peek_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw LoadError("peek_checkpoint: cannot open " + path);
    json hdr;
    return read_header(f, path, hdr);
}

void save_checkpoint_parts(const std::string& path, const CheckpointMeta& meta,
                           const StoreParts& parts) {
    NamedVars vars;
    for (const auto& [prefix, store] : parts)
        for (const auto& [name, var] : store->named()) vars.emplace_back(prefix + "/" + name, var);
    write_file(path, meta, vars);
}

CheckpointMeta load_checkpoint_parts(const std::string& path, const MutStoreParts& parts) {
    NamedVars vars;
    for (const auto& [prefix, store] : parts)
        for (const auto& [name, var] : store->named()) vars.emplace_back(prefix + "/" + name, var);
    return read_file(path, vars);
}

}  // namespace cvdx::io
