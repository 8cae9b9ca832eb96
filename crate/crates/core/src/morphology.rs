//! Binary morphology with a disk structuring element, and 4-connected labeling.

use std::collections::VecDeque;

use crate::grid::BinaryMask;

fn disk(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut offs = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                offs.push((dx, dy));
            }
        }
    }
    offs
}

fn neighbors<'a>(m: &'a BinaryMask, x: usize, y: usize, offs: &'a [(isize, isize)]) -> impl Iterator<Item = bool> + 'a {
    let (w, h) = (m.width() as isize, m.height() as isize);
    offs.iter().filter_map(move |&(dx, dy)| {
        let (nx, ny) = (x as isize + dx, y as isize + dy);
        (nx >= 0 && ny >= 0 && nx < w && ny < h).then(|| m.at(nx as usize, ny as usize))
    })
}

pub fn dilate(m: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return m.clone();
    }
    let offs = disk(radius);
    BinaryMask::from_fn(m.width(), m.height(), |x, y| neighbors(m, x, y, &offs).any(|b| b))
}

/// Pixels beyond the border do not erode.
pub fn erode(m: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return m.clone();
    }
    let offs = disk(radius);
    BinaryMask::from_fn(m.width(), m.height(), |x, y| neighbors(m, x, y, &offs).all(|b| b))
}

/// Dilation followed by erosion, computed as if the image extended with
/// unset pixels, so blobs touching the border do not grow along it.
/// Never removes a set pixel.
pub fn close(m: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return m.clone();
    }
    let (w, h) = m.dims();
    let padded = BinaryMask::from_fn(w + 2 * radius, h + 2 * radius, |x, y| {
        x >= radius && y >= radius && x - radius < w && y - radius < h && m.at(x - radius, y - radius)
    });
    let closed = erode(&dilate(&padded, radius), radius);
    BinaryMask::from_fn(w, h, |x, y| closed.at(x + radius, y + radius))
}

/// 4-connected components as pixel lists, ordered by first pixel in row-major order.
pub fn components(m: &BinaryMask) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = m.dims();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for (sx, sy) in m.pixels() {
        if seen[sy * w + sx] {
            continue;
        }
        seen[sy * w + sx] = true;
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([(sx, sy)]);
        while let Some((x, y)) = queue.pop_front() {
            comp.push((x, y));
            let cand = [
                (x.wrapping_sub(1), y),
                (x + 1, y),
                (x, y.wrapping_sub(1)),
                (x, y + 1),
            ];
            for (nx, ny) in cand {
                if nx < w && ny < h && !seen[ny * w + nx] && m.at(nx, ny) {
                    seen[ny * w + nx] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Largest 4-connected component; ties go to the component found first.
pub fn largest_component(m: &BinaryMask) -> BinaryMask {
    let mut best: Option<Vec<(usize, usize)>> = None;
    for c in components(m) {
        if best.as_ref().is_none_or(|b| c.len() > b.len()) {
            best = Some(c);
        }
    }
    let mut out = BinaryMask::empty(m.width(), m.height());
    for (x, y) in best.unwrap_or_default() {
        out.set(x, y, true);
    }
    out
}
