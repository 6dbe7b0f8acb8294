#ifndef DIFFDIST_VALIDATION_HPP
#define DIFFDIST_VALIDATION_HPP

#include <string>
#include <utility>
#include <vector>

namespace diffdist {

/// One named property check with its failure count and the worst observed
/// value of the quantity it bounds.
struct Check
{
  Check() = default;
  explicit Check(std::string n) : name(std::move(n)) {}

  std::string name;
  bool passed = true;
  long failures = 0;
  long samples = 0;
  double worst = 0.0;
  std::string note;
};

struct ValidationReport
{
  std::string subject;
  std::vector<Check> checks;

  bool passed() const
  {
    for (const auto& c : checks)
      if (!c.passed)
        return false;
    return true;
  }

  const Check* find(const std::string& name) const
  {
    for (const auto& c : checks)
      if (c.name == name)
        return &c;
    return nullptr;
  }
};

} // namespace diffdist

#endif // DIFFDIST_VALIDATION_HPP
