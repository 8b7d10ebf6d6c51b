from __future__ import annotations

from pydantic import BaseModel, Field


class FrameReport(BaseModel):
    index: int
    psnr: float | None = None
    ssim: float | None = None
    overlap_empty: bool = False
    smoothed: bool = False
    render_fallback: bool = False
    estimation_fallback: bool = False
    # Output resolution (width, height) and the share of it covered by neither view.
    canvas_size: tuple[int, int] = (0, 0)
    invalid_area: float = Field(0.0, ge=0, le=1)


class VideoReport(BaseModel):
    video: str
    mode: str
    frames: list[FrameReport] = Field(default_factory=list)
    psnr_mean: float | None = None
    ssim_mean: float | None = None
    psnr_min: float | None = None
    stability: float = Field(0.0, ge=0)
    stability_raw: float = Field(0.0, ge=0)
    distortion: float = Field(0.0, ge=0)
    estimation_fallbacks: int = 0
    render_fallbacks: int = 0
    canvas_size_mean: tuple[float, float] | None = None
    invalid_area_mean: float | None = None
    # Online only: mean distance between consecutive windows on their shared frames.
    window_discrepancy: float | None = None
    timings_ms: dict[str, float] = Field(default_factory=dict)

    @classmethod
    def aggregate(cls, video: str, mode: str, frames: list[FrameReport], **scores: object) -> "VideoReport":
        psnr = [f.psnr for f in frames if f.psnr is not None]
        ssim = [f.ssim for f in frames if f.ssim is not None]
        count = len(frames)
        return cls(
            video=video,
            mode=mode,
            frames=frames,
            psnr_mean=sum(psnr) / len(psnr) if psnr else None,
            ssim_mean=sum(ssim) / len(ssim) if ssim else None,
            psnr_min=min(psnr) if psnr else None,
            estimation_fallbacks=sum(f.estimation_fallback for f in frames),
            render_fallbacks=sum(f.render_fallback for f in frames),
            canvas_size_mean=(
                (sum(f.canvas_size[0] for f in frames) / count, sum(f.canvas_size[1] for f in frames) / count)
                if count
                else None
            ),
            invalid_area_mean=sum(f.invalid_area for f in frames) / count if count else None,
            **scores,
        )
