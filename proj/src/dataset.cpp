#include "borex/dataset.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace borex {
namespace {

constexpr char kMagic[4] = {'B', 'X', 'T', '1'};

void write_header(std::ostream& out, std::uint32_t t, std::uint32_t h, std::uint32_t w,
                  std::uint32_t c) {
  out.write(kMagic, 4);
  for (std::uint32_t v : {t, h, w, c}) {
    char buf[4];
    buf[0] = static_cast<char>(v & 0xff);
    buf[1] = static_cast<char>((v >> 8) & 0xff);
    buf[2] = static_cast<char>((v >> 16) & 0xff);
    buf[3] = static_cast<char>((v >> 24) & 0xff);
    out.write(buf, 4);
  }
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
         (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

struct RawTensor {
  VolumeShape shape;
  std::uint32_t channels;
  std::vector<float> data;
};

RawTensor read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ManifestError("cannot open tensor file: " + path.string());
  }
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ManifestError("bad tensor magic in " + path.string());
  }
  RawTensor raw;
  raw.shape.frames = read_u32(in);
  raw.shape.height = read_u32(in);
  raw.shape.width = read_u32(in);
  raw.channels = read_u32(in);
  if (!in) {
    throw ManifestError("truncated tensor header in " + path.string());
  }
  std::size_t count = raw.shape.cells() * raw.channels;
  raw.data.resize(count);
  static_assert(sizeof(float) == 4);
  in.read(reinterpret_cast<char*>(raw.data.data()), static_cast<std::streamsize>(count * 4));
  if (!in) {
    throw ManifestError("truncated tensor data in " + path.string());
  }
  return raw;
}

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const ImageVolume& volume) {
  std::ofstream out(path, std::ios::binary);
  write_header(out, static_cast<std::uint32_t>(volume.shape().frames),
               static_cast<std::uint32_t>(volume.shape().height),
               static_cast<std::uint32_t>(volume.shape().width),
               static_cast<std::uint32_t>(volume.channels()));
  out.write(reinterpret_cast<const char*>(volume.data().data()),
            static_cast<std::streamsize>(volume.data().size() * 4));
}

void write_tensor(const std::filesystem::path& path, const SaliencyVolume& volume) {
  std::ofstream out(path, std::ios::binary);
  write_header(out, static_cast<std::uint32_t>(volume.shape().frames),
               static_cast<std::uint32_t>(volume.shape().height),
               static_cast<std::uint32_t>(volume.shape().width), 1);
  std::vector<float> as_float(volume.values().begin(), volume.values().end());
  out.write(reinterpret_cast<const char*>(as_float.data()),
            static_cast<std::streamsize>(as_float.size() * 4));
}

ImageVolume read_image_tensor(const std::filesystem::path& path) {
  RawTensor raw = read_raw(path);
  return ImageVolume(raw.shape, raw.channels, std::move(raw.data));
}

SaliencyVolume read_saliency_tensor(const std::filesystem::path& path) {
  RawTensor raw = read_raw(path);
  if (raw.channels != 1) {
    throw ManifestError("saliency/region tensor must have C=1: " + path.string());
  }
  std::vector<double> values(raw.data.begin(), raw.data.end());
  return SaliencyVolume(raw.shape, std::move(values));
}

std::vector<DatasetItem> dataset_load(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw ManifestError("cannot open manifest: " + manifest_path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError("manifest parse error at line " +
                        std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
  }
  if (!doc.contains("items") || !doc["items"].is_array()) {
    throw ManifestError("manifest missing \"items\" array (line 1)");
  }

  const auto base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  std::vector<DatasetItem> items;
  std::size_t index = 0;
  for (const auto& entry : doc["items"]) {
    if (!entry.contains("image") || !entry.contains("label")) {
      throw ManifestError("manifest item " + std::to_string(index) +
                          " missing \"image\" or \"label\"");
    }
    DatasetItem item;
    item.name = entry.value("name", "item" + std::to_string(index));
    item.image = read_image_tensor(resolve(entry["image"].get<std::string>()));
    item.target = Label{entry["label"].get<std::string>()};

    if (entry.contains("region") && !entry["region"].is_null()) {
      item.region = read_saliency_tensor(resolve(entry["region"].get<std::string>()));
      if (item.region->shape() != item.image.shape()) {
        throw ShapeError("region shape mismatch for item " + std::to_string(index));
      }
      bool any = false;
      for (double v : item.region->values()) {
        if (v != 0.0 && v != 1.0) {
          throw ManifestError("region values must be 0 or 1 for item " + std::to_string(index));
        }
        any = any || v == 1.0;
      }
      if (!any) {
        throw ManifestError("region has no true cell for item " + std::to_string(index));
      }
    }
    if (entry.contains("prior") && !entry["prior"].is_null()) {
      item.prior = read_saliency_tensor(resolve(entry["prior"].get<std::string>()));
      if (item.prior->shape() != item.image.shape()) {
        throw ShapeError("prior shape mismatch for item " + std::to_string(index));
      }
    }
    items.push_back(std::move(item));
    ++index;
  }
  return items;
}

}  // namespace borex
