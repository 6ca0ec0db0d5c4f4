#pragma once

#include <filesystem>

#include "edabench/ingestion.hpp"

namespace edabench {

/// Writes the bundled mini-dataset: ten mock CAD screenshots covering all
/// eight software/field combinations, a manifest, scripted backend fixtures
/// and a dry-run config. Output is a pure function of the code; the files
/// under data/mini are exactly what this produces.
///
///   <dir>/manifest.jsonl
///   <dir>/images/<id>.png
///   <dir>/scripted/{mllm,uitars-sim,aguvis-sim,judge}.json
///   <dir>/dryrun.json
void write_synthetic_dataset(const std::filesystem::path& dir);

/// Renders one mock interface. Exposed for tests.
Raster render_mock_gui(int width, int height, SoftwareTag software, FieldTag field, unsigned seed);

}  // namespace edabench
