#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vdfield/defield.hpp"
#include "vdfield/types.hpp"

namespace vdfield {

/// SH band-0 normalisation used by splat PLY colours.
inline constexpr double kShC0 = 0.28209479177;

/// Binary little-endian 3DGS PLY. Higher SH bands are dropped; a note is
/// appended to warnings for each dropped group.
SplatModel parse_splats(std::string_view bytes, std::vector<std::string>* warnings = nullptr);
std::string format_splats(const SplatModel& model);
SplatModel load_splats(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_splats(const SplatModel& model, const std::string& path);

/// Wavefront OBJ, positions and faces only. Polygons are fanned.
TriMeshModel parse_mesh(std::string_view text);
std::string format_mesh(const TriMeshModel& model);
TriMeshModel load_mesh(const std::string& path);
void save_mesh(const TriMeshModel& model, const std::string& path);

inline constexpr int kDocumentVersion = 1;

std::string format_document(const DeformationDocument& doc);
DeformationDocument parse_document(std::string_view text);
/// One entry of a document's keypoint list, in the same layout.
std::string format_keypoint(const KeypointDeformation& k);
DeformationDocument load_document(const std::string& path);
void save_document(const DeformationDocument& doc, const std::string& path);

/// Picks the format from the extension (.ply or .obj).
AnyModel load_model(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_model(const AnyModel& model, const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace vdfield
