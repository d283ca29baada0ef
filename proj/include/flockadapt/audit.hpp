#pragma once

// Post-hoc checks on a recorded trace. Every comparison allows for the
// rounding of the stored values, so an audit of a CSV trace is as strict as
// the file precision permits.

#include <flockadapt/engine.hpp>

#include <string>
#include <vector>

namespace flockadapt {

struct AuditTolerances
{
    double relative = 1e-9;  ///< re-derived E and V
    double monotone = 1e-9;  ///< allowed increase of E or V per sample
    double absolute = 1e-12; ///< floor for identities between stored values
};

struct InvariantResult
{
    std::string name;
    std::string description;
    std::size_t checked = 0;
    std::size_t violations = 0;
    std::vector<std::string> examples; ///< first few violations

    bool passed() const { return violations == 0; }
};

struct AuditReport
{
    std::vector<InvariantResult> invariants;

    bool passed() const;
    std::vector<std::string> failed_names() const;
    std::string to_text() const;
};

AuditReport audit_trace(const Trace& trace, const AuditTolerances& tol = {});

} // namespace flockadapt
