#include "msdybo/matrix_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace msdybo {

namespace {

constexpr auto kDigits = std::numeric_limits<double>::max_digits10;

[[noreturn]] void malformed(const std::string& source, const std::string& what)
{
    throw InvalidArgument(source + ": " + what);
}

}  // namespace

void write_matrix(std::ostream& out, const Matrix& m)
{
    out << "%dybo-matrix 1 " << m.rows() << ' ' << m.cols() << '\n' << std::setprecision(kDigits);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) out << m(i, j) << (j + 1 < m.cols() ? ' ' : '\n');
    }
}

Matrix read_matrix(std::istream& in, const std::string& source)
{
    std::string tag;
    int version = 0;
    Index rows = -1;
    Index cols = -1;
    if (!(in >> tag >> version >> rows >> cols) || tag != "%dybo-matrix") malformed(source, "missing matrix header");
    if (version != 1) malformed(source, "unsupported matrix version " + std::to_string(version));
    if (rows < 0 || cols < 0) malformed(source, "negative matrix dimensions");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            if (!(in >> m(i, j))) {
                malformed(source, "expected " + std::to_string(rows * cols) + " values, stopped at row " +
                                      std::to_string(i) + " column " + std::to_string(j));
            }
        }
    }
    return m;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m)
{
    std::ofstream out(path);
    require(out.good(), "cannot write " + path.string());
    write_matrix(out, m);
}

Matrix read_matrix(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(in.good(), "cannot open " + path.string());
    return read_matrix(in, path.string());
}

void write_offline_cache(const std::filesystem::path& path, const OfflineSpace& space, std::uint64_t hash)
{
    std::ofstream out(path);
    require(out.good(), "cannot write " + path.string());
    const SparseMatrix& r = space.prolongation;
    out << "%dybo-offline 1\n"
        << "hash " << hex64(hash) << '\n'
        << "prolongation " << r.rows() << ' ' << r.cols() << ' ' << r.nonZeros() << '\n'
        << "neighborhoods " << space.basis_counts.size() << '\n'
        << std::setprecision(kDigits);
    for (std::size_t i = 0; i < space.basis_counts.size(); ++i) {
        const Vector& ev = space.eigenvalues[i];
        out << "node " << i << ' ' << space.basis_counts[i] << ' ' << ev.size();
        for (Index k = 0; k < ev.size(); ++k) out << ' ' << ev[k];
        out << '\n';
    }
    for (Index col = 0; col < r.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(r, col); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
}

OfflineSpace read_offline_cache(const std::filesystem::path& path, std::uint64_t expected_hash)
{
    std::ifstream in(path);
    require(in.good(), "cannot open offline cache " + path.string());
    const std::string src = path.string();
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "%dybo-offline") malformed(src, "not an offline cache");
    if (version != 1) malformed(src, "unsupported cache version " + std::to_string(version));

    std::string hash_text;
    if (!(in >> tag >> hash_text) || tag != "hash") malformed(src, "missing hash line");
    if (expected_hash != 0 && hash_text != hex64(expected_hash)) {
        malformed(src, "configuration hash " + hash_text + " does not match " + hex64(expected_hash));
    }
    Index rows = 0;
    Index cols = 0;
    Index nnz = 0;
    if (!(in >> tag >> rows >> cols >> nnz) || tag != "prolongation") malformed(src, "missing prolongation line");
    std::size_t n_in = 0;
    if (!(in >> tag >> n_in) || tag != "neighborhoods") malformed(src, "missing neighborhoods line");

    OfflineSpace space;
    for (std::size_t i = 0; i < n_in; ++i) {
        std::size_t idx = 0;
        Index l = 0;
        Index k = 0;
        if (!(in >> tag >> idx >> l >> k) || tag != "node" || idx != i) malformed(src, "bad node line " + std::to_string(i));
        Vector ev(k);
        for (Index j = 0; j < k; ++j) {
            if (!(in >> ev[j])) malformed(src, "bad eigenvalue list for node " + std::to_string(i));
        }
        space.basis_counts.push_back(l);
        space.eigenvalues.push_back(std::move(ev));
        for (Index j = 0; j < l; ++j) space.column_owner.push_back(static_cast<Index>(i));
    }
    if (static_cast<Index>(space.column_owner.size()) != cols) malformed(src, "basis counts do not sum to the column count");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(nnz));
    for (Index e = 0; e < nnz; ++e) {
        Index r = 0;
        Index c = 0;
        double v = 0.0;
        if (!(in >> r >> c >> v)) malformed(src, "expected " + std::to_string(nnz) + " entries, got " + std::to_string(e));
        if (r < 0 || r >= rows || c < 0 || c >= cols) malformed(src, "entry " + std::to_string(e) + " out of range");
        t.emplace_back(r, c, v);
    }
    space.prolongation.resize(rows, cols);
    space.prolongation.setFromTriplets(t.begin(), t.end());
    space.prolongation.makeCompressed();
    return space;
}

std::uint64_t fnv1a(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << value;
    return os.str();
}

}  // namespace msdybo
