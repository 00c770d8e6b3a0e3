#include "sme/distance.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "sme/errors.hpp"
#include "sme/parallel.hpp"

namespace sme {

std::vector<std::uint32_t> bfs_distances(const DirectedGraph& g, NodeId source, bool follow_out) {
  std::vector<std::uint32_t> dist(g.num_nodes(), DistanceMatrix::kInfinity);
  std::vector<NodeId> queue;
  queue.reserve(g.num_nodes());
  dist[source] = 0;
  queue.push_back(source);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId u = queue[head];
    const auto& nbrs = follow_out ? g.out_neighbors(u) : g.in_neighbors(u);
    for (NodeId v : nbrs) {
      if (dist[v] == DistanceMatrix::kInfinity) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

DistanceMatrix all_pairs_shortest_paths(const DirectedGraph& g, NodeId max_nodes,
                                        unsigned threads) {
  const NodeId n = g.num_nodes();
  if (n > max_nodes) {
    throw capacity_error("graph has " + std::to_string(n) + " nodes, above the dense APSP limit " +
                         std::to_string(max_nodes) + "; use sampled mode");
  }
  DistanceMatrix d(n);
  parallel_chunks(n, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t u = lo; u < hi; ++u) {
      auto row = bfs_distances(g, static_cast<NodeId>(u), true);
      std::memcpy(d.row(static_cast<NodeId>(u)), row.data(), sizeof(std::uint32_t) * n);
    }
  });
  return d;
}

namespace {

void put_u64_le(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64_le(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_distance_matrix(const DistanceMatrix& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw validation_error("cannot write distance matrix: " + path);
  out.write("SMD1", 4);
  put_u64_le(out, d.num_nodes());
  const std::size_t count = d.entries().size();
  std::vector<unsigned char> buf(count * 4);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t v = d.entries()[i];
    buf[4 * i + 0] = static_cast<unsigned char>(v & 0xFF);
    buf[4 * i + 1] = static_cast<unsigned char>((v >> 8) & 0xFF);
    buf[4 * i + 2] = static_cast<unsigned char>((v >> 16) & 0xFF);
    buf[4 * i + 3] = static_cast<unsigned char>((v >> 24) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw validation_error("write failed: " + path);
}

DistanceMatrix load_distance_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open distance matrix: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SMD1", 4) != 0)
    throw validation_error("not a distance matrix file (bad magic): " + path);
  const std::uint64_t n64 = get_u64_le(in);
  if (!in || n64 > 0xFFFFFFFFull)
    throw validation_error("corrupt distance matrix header: " + path);
  const NodeId n = static_cast<NodeId>(n64);
  DistanceMatrix d(n);
  const std::size_t count = static_cast<std::size_t>(n) * n;
  std::vector<unsigned char> buf(count * 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw validation_error("truncated distance matrix: " + path);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t v = static_cast<std::uint32_t>(buf[4 * i]) |
                      (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                      (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                      (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    const NodeId u = static_cast<NodeId>(i / n);
    const NodeId w = static_cast<NodeId>(i % n);
    d.set(u, w, v);
  }
  return d;
}

void save_distance_matrix_csv(const DistanceMatrix& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write distance matrix CSV: " + path);
  const NodeId n = d.num_nodes();
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (v) out << ',';
      if (d.is_infinite(u, v)) {
        out << "inf";
      } else {
        out << d.at(u, v);
      }
    }
    out << '\n';
  }
}

}  // namespace sme
