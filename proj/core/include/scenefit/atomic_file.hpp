#pragma once

#include <filesystem>
#include <string>

namespace scenefit {

/// Writes via a sibling temp file plus rename, so readers never observe a
/// half-written artifact. Creates missing parent directories. The text may
/// contain arbitrary bytes (written in binary mode).
void atomic_write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace scenefit
