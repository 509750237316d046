#pragma once

#include "vortopo/coarsegrain.hpp"
#include "vortopo/gpe.hpp"
#include "vortopo/topology.hpp"

#include <filesystem>
#include <map>

namespace vortopo {

/// Filament document: {"filaments": [{"id", "gamma", "points": [[x,y,z]...]}]}.
std::vector<Filament> read_filaments(const std::filesystem::path& path);
void write_filaments(const std::filesystem::path& path,
                     const std::vector<Filament>& filaments);

/// {"lk": [[...]], "wr": [...], "tw": [...], "sl": [...], "total": ...,
///  "tolerances": {...}} plus raw linking entries and circulations.
void write_report(const std::filesystem::path& path, const HelicityReport& report);

/// One-line JSON header {"shape","origin","spacing","components","dtype"}
/// followed by a raw little-endian binary blob, x-fastest; vector fields are
/// stored as three consecutive scalar blocks.
void write_vector_grid(const std::filesystem::path& path, const VectorGrid& grid);
VectorGrid read_vector_grid(const std::filesystem::path& path);

void write_complex_field(const std::filesystem::path& path,
                         const ComplexField3D& field);
ComplexField3D read_complex_field(const std::filesystem::path& path);

/// CSV diagnostics: t,norm,energy,total_length,lk_sum.
void write_series_csv(const std::filesystem::path& path, const GpeSeries& series);

std::uint64_t fnv1a64(const std::filesystem::path& path);
/// manifest.json in `dir` listing byte size and fnv1a64 of each named file.
void write_manifest(const std::filesystem::path& dir,
                    const std::vector<std::string>& names);

}  // namespace vortopo
