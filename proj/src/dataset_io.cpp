#include "terra_risk/dataset_io.hpp"

#include <json.hpp>

#include "terra_risk/error.hpp"
#include "terra_risk/raster_io.hpp"

namespace terra_risk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_file(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("missing " + path.string());
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw DataError("malformed " + path.string() + ": " + e.what());
    }
}

json slip_params_json(const SlipParams& p) {
    return {{"offset", p.offset}, {"amplitude", p.amplitude}, {"steepness", p.steepness}};
}

}  // namespace

void save_instance(const fs::path& dir, const ProblemInstance& inst) {
    fs::create_directories(dir);
    fs::remove(dir / "manifest.json");
    write_f32(dir / "height.f32", std::span<const float>(inst.heightmap.elevation));
    write_u16(dir / "class.u16", std::span<const std::uint16_t>(inst.classmap.class_id));

    json m;
    m["id"] = inst.id;
    m["kind"] = to_string(inst.kind);
    m["width"] = inst.heightmap.width;
    m["height"] = inst.heightmap.height;
    m["resolution"] = inst.heightmap.resolution;
    m["seed"] = inst.seed;
    m["num_classes"] = inst.num_classes;
    m["group"] = {{"members", inst.group.members}, {"occupancy", inst.group.occupancy}};
    json slips = json::array();
    for (const auto& s : inst.slip_models) {
        slips.push_back({{"class_id", s.class_id},
                         {"params", slip_params_json(s.params)},
                         {"noise_sigma", s.noise_sigma},
                         {"noise_scales_with_gradient", s.noise_scales_with_gradient},
                         {"gradient_noise_gain", s.gradient_noise_gain}});
    }
    m["slip_models"] = std::move(slips);
    m["appearance_key"] = inst.appearance_key;
    m["rasters"] = {{"height", "height.f32"}, {"class", "class.u16"}};
    write_text_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

ProblemInstance load_instance(const fs::path& dir) {
    const json m = parse_file(dir / "manifest.json");
    ProblemInstance inst;
    try {
        inst.id = m.at("id").get<std::string>();
        inst.kind = parse_dataset_kind(m.at("kind").get<std::string>());
        const int w = m.at("width").get<int>();
        const int h = m.at("height").get<int>();
        if (w < 2 || h < 2) throw DataError("instance " + dir.string() + ": bad dimensions");
        inst.seed = m.at("seed").get<std::uint64_t>();
        inst.num_classes = m.at("num_classes").get<int>();
        inst.group.members = m.at("group").at("members").get<std::vector<int>>();
        inst.group.occupancy = m.at("group").at("occupancy").get<std::vector<double>>();
        for (const auto& s : m.at("slip_models")) {
            SlipGroundTruth gt;
            gt.class_id = s.at("class_id").get<int>();
            const auto& p = s.at("params");
            gt.params = {p.at("offset").get<double>(), p.at("amplitude").get<double>(), p.at("steepness").get<double>()};
            gt.noise_sigma = s.at("noise_sigma").get<double>();
            gt.noise_scales_with_gradient = s.at("noise_scales_with_gradient").get<bool>();
            gt.gradient_noise_gain = s.at("gradient_noise_gain").get<double>();
            inst.slip_models.push_back(gt);
        }
        inst.appearance_key = m.at("appearance_key").get<std::vector<int>>();
        inst.heightmap.width = inst.classmap.width = w;
        inst.heightmap.height = inst.classmap.height = h;
        inst.heightmap.resolution = m.at("resolution").get<double>();
    } catch (const json::exception& e) {
        throw DataError("malformed manifest in " + dir.string() + ": " + e.what());
    } catch (const ParameterError& e) {
        throw DataError("manifest in " + dir.string() + ": " + e.what());
    }
    const std::size_t cells = inst.heightmap.shape().num_cells();
    inst.heightmap.elevation = read_f32(dir / "height.f32", cells);
    inst.classmap.class_id = read_u16(dir / "class.u16", cells);
    for (auto c : inst.classmap.class_id) {
        if (c >= inst.num_classes) throw DataError("instance " + inst.id + ": class id out of range");
    }
    return inst;
}

std::string catalog_to_json(const ClassCatalog& catalog) {
    json classes = json::array();
    for (const auto& c : catalog.classes) {
        classes.push_back({{"name", c.name},
                           {"offset", c.params.offset},
                           {"amplitude", c.params.amplitude},
                           {"steepness", c.params.steepness},
                           {"appearance", c.appearance_key}});
    }
    json entry = {{"group_size", catalog.group_size},
                  {"noise",
                   {{"sigma_base", catalog.noise.sigma_base},
                    {"scales_with_gradient", catalog.noise.scales_with_gradient},
                    {"gradient_gain", catalog.noise.gradient_gain}}},
                  {"classes", std::move(classes)}};
    json doc;
    doc[std::string(to_string(catalog.kind))] = std::move(entry);
    return doc.dump();
}

void save_dataset_index(const fs::path& root, const DatasetIndex& index) {
    json j;
    j["kind"] = to_string(index.kind);
    j["seed"] = index.seed;
    j["catalog"] = json::parse(catalog_to_json(index.catalog)).at(std::string(to_string(index.kind)));
    json splits = json::object();
    for (const auto& [split, dirs] : index.splits) splits[std::string(to_string(split))] = dirs;
    j["splits"] = std::move(splits);
    write_text_atomic(root / "dataset.json", j.dump(2) + "\n");
}

DatasetIndex load_dataset_index(const fs::path& root) {
    const json j = parse_file(root / "dataset.json");
    DatasetIndex index;
    try {
        index.kind = parse_dataset_kind(j.at("kind").get<std::string>());
        index.seed = j.at("seed").get<std::uint64_t>();
        json doc;
        doc[std::string(to_string(index.kind))] = j.at("catalog");
        index.catalog = parse_catalog(doc.dump(), index.kind);
        for (const auto& [name, dirs] : j.at("splits").items()) {
            index.splits.emplace_back(parse_split(name), dirs.get<std::vector<std::string>>());
        }
    } catch (const json::exception& e) {
        throw DataError("malformed " + (root / "dataset.json").string() + ": " + e.what());
    } catch (const Error& e) {
        throw DataError((root / "dataset.json").string() + ": " + e.what());
    }
    return index;
}

std::vector<ProblemInstance> load_split(const fs::path& root, const DatasetIndex& index, Split split) {
    for (const auto& [s, dirs] : index.splits) {
        if (s != split) continue;
        std::vector<ProblemInstance> out;
        for (const auto& d : dirs) out.push_back(load_instance(root / d));
        return out;
    }
    throw DataError("dataset " + root.string() + " has no '" + std::string(to_string(split)) + "' split");
}

void save_models(const fs::path& dir, const std::vector<GPModel>& models) {
    fs::create_directories(dir);
    fs::remove(dir / "models.json");
    json files = json::array();
    for (const auto& m : models) {
        save_gp_model(m, dir / gp_model_filename(m.class_id()));
        files.push_back(gp_model_filename(m.class_id()));
    }
    write_text_atomic(dir / "models.json", json({{"models", files}}).dump(2) + "\n");
}

SlipModelSet load_models(const fs::path& dir) {
    const json j = parse_file(dir / "models.json");
    SlipModelSet set;
    try {
        for (const auto& f : j.at("models")) set.insert(load_gp_model(dir / f.get<std::string>()));
    } catch (const json::exception& e) {
        throw DataError("malformed " + (dir / "models.json").string() + ": " + e.what());
    }
    return set;
}

}  // namespace terra_risk
