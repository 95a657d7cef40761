// Thin C++ ownership and error handling over the C API.
#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "patlas/patlas.h"

namespace patlas::cli {

/// A failed library call: the status plus the library's message.
class LibraryError : public std::runtime_error {
 public:
  LibraryError(patlas_status status, const std::string& msg)
      : std::runtime_error(msg), status_(status) {}
  patlas_status status() const noexcept { return status_; }

 private:
  patlas_status status_;
};

/// An upstream artifact a stage needs does not exist.
class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void check(patlas_status st) {
  if (st != PATLAS_OK) throw LibraryError(st, patlas_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using FeatureSetPtr =
    std::unique_ptr<patlas_feature_set, Deleter<patlas_feature_set, patlas_feature_set_free>>;
using ModelPtr =
    std::unique_ptr<patlas_cluster_model, Deleter<patlas_cluster_model, patlas_model_free>>;
using AssignmentPtr =
    std::unique_ptr<patlas_assignment, Deleter<patlas_assignment, patlas_assignment_free>>;
using SweepPtr = std::unique_ptr<patlas_sweep, Deleter<patlas_sweep, patlas_sweep_free>>;
using CatalogPtr = std::unique_ptr<patlas_catalog, Deleter<patlas_catalog, patlas_catalog_free>>;
using TablePtr = std::unique_ptr<patlas_probability_table,
                                 Deleter<patlas_probability_table, patlas_probability_table_free>>;
using PredictionsPtr =
    std::unique_ptr<patlas_predictions, Deleter<patlas_predictions, patlas_predictions_free>>;
using TilingOptionsPtr = std::unique_ptr<patlas_tiling_options,
                                         Deleter<patlas_tiling_options, patlas_tiling_options_free>>;

}  // namespace patlas::cli
