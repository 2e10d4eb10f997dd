#pragma once

// Core data types for the staff rostering model: shift codes, problem
// instances, schedules, and the error hierarchy shared by every module.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace roster {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
  using Error::Error;
};

struct ConfigurationError : Error {
  using Error::Error;
};

struct GenerationExhausted : Error {
  using Error::Error;
};

struct CapacityError : Error {
  using Error::Error;
};

struct InfeasibleInstance : Error {
  using Error::Error;
};

struct InvalidSolution : Error {
  using Error::Error;
};

struct DegenerateSample : Error {
  using Error::Error;
};

struct ContractViolation : Error {
  using Error::Error;
};

/// Raised when an improvement operator fails. `epoch` is filled in by the GA
/// loop when the failure happens inside a run.
struct OperatorFailure : Error {
  explicit OperatorFailure(const std::string& what, std::optional<int> at_epoch = std::nullopt)
      : Error(at_epoch ? what + " (epoch " + std::to_string(*at_epoch) + ")" : what),
        epoch(at_epoch) {}
  std::optional<int> epoch;
};

// ---------------------------------------------------------------------------
// Shift codes
// ---------------------------------------------------------------------------

enum class Shift : std::uint8_t { Rest = 0, Morning = 1, Afternoon = 2, Night = 3 };

inline constexpr int kNumCodes = 4;
inline constexpr int kNumShifts = 3;

constexpr bool is_work(Shift s) noexcept { return s != Shift::Rest; }
constexpr int code(Shift s) noexcept { return static_cast<int>(s); }

inline Shift shift_from_code(int v) {
  if (v < 0 || v >= kNumCodes) throw InvalidInput("shift code out of range: " + std::to_string(v));
  return static_cast<Shift>(v);
}

// ---------------------------------------------------------------------------
// Dense row-major matrix
// ---------------------------------------------------------------------------

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw InvalidInput("negative matrix dimension");
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int r, int c) noexcept { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const noexcept {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::span<T> row(int r) noexcept {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const T> row(int r) const noexcept {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

/// An employees x days grid of shift codes; the GA chromosome.
using Schedule = Matrix<Shift>;

inline std::size_t hamming(const Schedule& a, const Schedule& b) {
  std::size_t n = 0;
  auto fa = a.flat();
  auto fb = b.flat();
  for (std::size_t i = 0; i < fa.size(); ++i) n += fa[i] != fb[i];
  return n;
}

struct ScheduleHash {
  std::size_t operator()(const Schedule& s) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (Shift c : s.flat()) {
      h ^= static_cast<std::uint64_t>(c);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h ^ (static_cast<std::uint64_t>(s.rows()) << 32 | s.cols()));
  }
};

// ---------------------------------------------------------------------------
// Instance
// ---------------------------------------------------------------------------

struct Instance {
  int num_employees = 0;
  int num_days = 0;
  int num_shifts = kNumShifts;
  int hours_per_shift = 8;
  int min_hours = 0;
  int max_hours = 0;
  int max_consecutive = 1;
  int min_rest = 1;
  int understaff_weight = 0;
  int overstaff_weight = 0;
  Matrix<int> coverage;  // days x shifts
  Matrix<int> pref_off;  // employees x days, entries in {0,1}
  std::optional<long long> reference_min_soft;

  /// Throws InvalidInput when the invariants do not hold.
  void validate() const {
    auto fail = [](const std::string& m) { throw InvalidInput("invalid instance: " + m); };
    if (num_employees < 1) fail("num_employees must be positive");
    if (num_days < 1) fail("num_days must be positive");
    if (num_shifts != kNumShifts) fail("num_shifts must be 3");
    if (hours_per_shift < 1) fail("hours_per_shift must be positive");
    if (min_hours < 0 || max_hours < 0) fail("hour bounds must be nonnegative");
    if (min_hours > max_hours) fail("min_hours > max_hours");
    if (max_hours > num_days * hours_per_shift) fail("max_hours exceeds days * hours_per_shift");
    if (max_consecutive < 1) fail("max_consecutive must be positive");
    if (min_rest < 1) fail("min_rest must be positive");
    if (understaff_weight < 0 || overstaff_weight < 0) fail("weights must be nonnegative");
    if (coverage.rows() != num_days || coverage.cols() != num_shifts) fail("coverage must be D x |S|");
    if (pref_off.rows() != num_employees || pref_off.cols() != num_days) fail("pref_off must be E x D");
    for (int v : coverage.flat())
      if (v < 0) fail("coverage entries must be nonnegative");
    for (int v : pref_off.flat())
      if (v != 0 && v != 1) fail("pref_off entries must be 0 or 1");
    if (reference_min_soft && *reference_min_soft < 0) fail("reference_min_soft must be nonnegative");
  }

  void check_schedule(const Schedule& s) const {
    if (s.rows() != num_employees || s.cols() != num_days)
      throw InvalidInput("schedule is " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                         ", instance expects " + std::to_string(num_employees) + "x" +
                         std::to_string(num_days));
  }
};

}  // namespace roster
