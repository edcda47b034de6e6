#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "terra_risk/gp.hpp"
#include "terra_risk/terrain.hpp"

namespace terra_risk {

// Instance container: <dir>/height.f32, <dir>/class.u16 and <dir>/manifest.json,
// the manifest written last so its presence marks a complete instance.
void save_instance(const std::filesystem::path& dir, const ProblemInstance& instance);
ProblemInstance load_instance(const std::filesystem::path& dir);

std::string catalog_to_json(const ClassCatalog& catalog);

/// Dataset root: instances/<id>/ plus dataset.json (written last) listing the
/// instance directories per split together with the class catalog.
struct DatasetIndex {
    DatasetKind kind = DatasetKind::Std;
    std::uint64_t seed = 0;
    ClassCatalog catalog;
    std::vector<std::pair<Split, std::vector<std::string>>> splits; // relative instance dirs
};

void save_dataset_index(const std::filesystem::path& root, const DatasetIndex& index);
DatasetIndex load_dataset_index(const std::filesystem::path& root);
std::vector<ProblemInstance> load_split(const std::filesystem::path& root, const DatasetIndex& index, Split split);

/// models/gp_<c>.json per class plus models/models.json (written last).
void save_models(const std::filesystem::path& dir, const std::vector<GPModel>& models);
SlipModelSet load_models(const std::filesystem::path& dir);

}  // namespace terra_risk
