#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "deltaclass/clustering.hpp"
#include "deltaclass/diff.hpp"
#include "deltaclass/errors.hpp"
#include "deltaclass/evaluate.hpp"
#include "deltaclass/metrics.hpp"

namespace py = pybind11;
using namespace deltaclass;

namespace {

VectorSet to_set(const std::vector<std::string>& ids, const std::vector<Vector>& vectors) {
  if (ids.size() != vectors.size()) throw Error("ids and vectors differ in length");
  if (vectors.empty()) throw Error("no vectors");
  VectorSet vs(vectors[0].size(), "python");
  for (std::size_t i = 0; i < ids.size(); ++i) vs.add(ids[i], vectors[i]);
  return vs;
}

py::dict clustering_dict(const Clustering& c) {
  py::dict d;
  d["k"] = c.k;
  d["ids"] = c.ids;
  d["assignment"] = c.assignment;
  d["centroids"] = c.centroids;
  d["iterations"] = c.iterations;
  d["converged"] = c.converged;
  d["functional_I"] = c.functional_I;
  d["first_seed"] = c.first_seed;
  d["noop_ids"] = c.noop_ids;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "deltaclass core: change metrics, cosine k-means and cluster quality";
  py::register_exception<Error>(m, "DeltaclassError", PyExc_RuntimeError);

  m.def("metric_names", [] {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kMetricCount; ++i) out.emplace_back(metric_name(static_cast<Metric>(i)));
    return out;
  });

  m.def("cosine_similarity", [](const Vector& a, const Vector& b) { return cosine_similarity(a, b); }, py::arg("a"),
        py::arg("b"));

  m.def(
      "measure_history",
      [](const std::filesystem::path& path) {
        auto profiles = ProfileSet::builtin();
        std::vector<std::pair<std::string, std::vector<std::int64_t>>> out;
        for (const auto& r : ingest_history(read_history(path)).records) {
          auto v = measure_change(r, profiles).values();
          out.emplace_back(r.change_id, std::vector<std::int64_t>(v.begin(), v.end()));
        }
        return out;
      },
      py::arg("path"), "Metric vectors of every change in a batch-history file, in timestamp order.");

  m.def(
      "cluster",
      [](const std::vector<std::string>& ids, const std::vector<Vector>& vectors, std::size_t k,
         std::size_t max_iterations, std::size_t restarts) {
        ClusterParams p;
        p.k = k;
        p.max_iterations = max_iterations;
        p.restarts = restarts;
        return clustering_dict(kmeans_cluster(to_set(ids, vectors), p));
      },
      py::arg("ids"), py::arg("vectors"), py::arg("k"), py::arg("max_iterations") = 300, py::arg("restarts") = 1);

  m.def(
      "functional_I",
      [](const std::vector<std::string>& ids, const std::vector<Vector>& vectors,
         const std::vector<std::size_t>& assignment, std::size_t k) {
        auto vs = to_set(ids, vectors);
        Clustering c;
        c.k = k;
        c.ids = ids;
        c.assignment = assignment;
        c.centroids.assign(k, Vector(vs.dimension(), 0.0));
        return quality_functional_I(c, vs);
      },
      py::arg("ids"), py::arg("vectors"), py::arg("assignment"), py::arg("k"));

  m.def(
      "quality_from_counts",
      [](const std::vector<std::string>& classes, const std::vector<std::vector<std::size_t>>& counts,
         const std::vector<std::string>& mapped) {
        auto t = ContingencyTable::from_counts(ClassSet(classes), counts, mapped);
        auto r = build_report(t);
        py::dict d;
        d["purity"] = r.cluster_purity;
        d["entropy"] = r.cluster_entropy;
        d["P_Q"] = r.by_cluster.purity;
        d["E_Q"] = r.by_cluster.entropy;
        d["P_C"] = r.by_class.purity;
        d["E_C"] = r.by_class.entropy;
        d["correctly_assigned"] = r.correctly_assigned;
        d["verification_size"] = r.verification_size;
        return d;
      },
      py::arg("classes"), py::arg("counts"), py::arg("mapped"),
      "Per-cluster and overall purity and entropy for a cluster-by-class count table.");
}
