#include <algorithm>
#include <map>
#include <numeric>

#include "vdfield/rigging.hpp"

namespace vdfield {

Eigen::SparseMatrix<double> cotangent_laplacian(const std::vector<Vec2>& v,
                                                const std::vector<Face>& faces) {
  std::map<std::pair<int, int>, double> edge_w;
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) {
      const int o = f[k], i = f[(k + 1) % 3], j = f[(k + 2) % 3];
      const Vec2 e1 = v[i] - v[o], e2 = v[j] - v[o];
      const double cross = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
      const double cot = e1.dot(e2) / cross;
      edge_w[{std::min(i, j), std::max(i, j)}] += 0.5 * cot;
    }
  }
  const int n = static_cast<int>(v.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(edge_w.size() * 4);
  std::vector<double> diag(n, 0.0);
  for (const auto& [e, w0] : edge_w) {
    const double w = std::max(w0, 1e-6);
    trip.emplace_back(e.first, e.second, -w);
    trip.emplace_back(e.second, e.first, -w);
    diag[e.first] += w;
    diag[e.second] += w;
  }
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, diag[i]);
  Eigen::SparseMatrix<double> l(n, n);
  l.setFromTriplets(trip.begin(), trip.end());
  return l;
}

Eigen::VectorXd lumped_mass(const std::vector<Vec2>& v, const std::vector<Face>& faces) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.size()));
  for (const Face& f : faces) {
    const Vec2 e1 = v[f[1]] - v[f[0]], e2 = v[f[2]] - v[f[0]];
    const double a = 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    for (int i : f) m[i] += a / 3.0;
  }
  return m;
}

std::vector<int> vertex_components(std::size_t n, const std::vector<Face>& faces, int* count) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Face& f : faces) {
    for (int k = 1; k < 3; ++k) {
      const int a = find(f[0]), b = find(f[k]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<int> label(n, -1), root_label(n, -1);
  int c = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int r = find(static_cast<int>(i));
    if (root_label[r] < 0) root_label[r] = c++;
    label[i] = root_label[r];
  }
  if (count) *count = c;
  return label;
}

}  // namespace vdfield
