#pragma once

namespace flakesift {

inline constexpr const char* kVersion = "0.1.0";

// Output file schema versions. Bump on any breaking layout change.
inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kTruthSchemaVersion = 1;
inline constexpr int kDossierSchemaVersion = 1;
inline constexpr int kEvalSchemaVersion = 1;

}  // namespace flakesift
