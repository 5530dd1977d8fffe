#!/usr/bin/env python3
"""Writes tests/data/disclosure_fixture.tsv, the annotated sentence set used to
score disclosure detectors.

Columns: id, label (disclosure | non-disclosure), compensation (Clear |
Ambiguous | None | -), relationship (Explicit | Grouped | MixedGroup | -),
text. Labels follow the annotation codebook: a sentence is a disclosure when
it tells the viewer that links, codes or products in the description earn
the creator something or are part of a paid arrangement. Mentions of
sponsorship or affiliate programs that do not concern the creator's own
links are not disclosures.

The set mixes templated sentences with hand-written hard cases on both
sides, so a detector tuned to a fixed vocabulary does not score perfectly.

Usage: python3 tools/make_disclosure_fixture.py [output.tsv]
"""

import random
import sys
from pathlib import Path

SEED = 20240611

PRODUCTS = [
    "camera", "tripod", "microphone", "mechanical keyboard", "desk lamp", "espresso machine",
    "hiking boots", "yoga mat", "air fryer", "gaming chair", "drawing tablet", "headphones",
    "standing desk", "cast iron pan", "ring light", "backpack", "monitor arm", "sewing machine",
]
URLS = [
    "https://amzn.to/3xKq9Lm", "https://go.clickhub.example/r/8812", "https://click.linkrail.example/a?lr_click=44",
    "https://sp.sharepath.example/x/19", "https://track.affnet.example/p/701", "https://out.refbay.example/g/5",
]

# (compensation, relationship) -> templates. {p} is a product, {u} a URL.
DISCLOSURES = {
    ("Clear", "Explicit"): [
        "I earn a small commission if you buy the {p} through this link: {u}",
        "If you purchase the {p} here I get a commission at no extra cost to you: {u}",
        "{p}: {u} (affiliate link, I earn a small commission on sales)",
        "As an Amazon Associate I earn from qualifying purchases, including this {p}: {u}",
        "This {p} link is an affiliate link and I make a small commission if you buy: {u}",
    ],
    ("Clear", "Grouped"): [
        "The links below are affiliate links, so I earn a commission on anything you buy through them.",
        "As an Amazon Associate I earn from qualifying purchases made through the links below.",
        "I get paid a small commission when you shop through the gear links listed below.",
        "Everything above is an affiliate link and I receive a small commission if you buy.",
        "All the links in this list are affiliate links that earn me a commission.",
    ],
    ("Clear", "MixedGroup"): [
        "Some of the links in this description are affiliate links, which means I earn a small commission.",
        "Some links may be affiliate links and I may earn a commission if you purchase.",
        "Certain links in the description earn me a commission when you buy something.",
        "This description may contain affiliate links, and I get a commission on qualifying purchases.",
    ],
    ("Ambiguous", "Explicit"): [
        "Grab the {p} with this affiliate link to support the channel: {u}",
        "Buying the {p} through my partner link helps support the channel: {u}",
        "Use this referral link for the {p} to support my work: {u}",
        "Picking up the {p} here supports the channel: {u}",
    ],
    ("Ambiguous", "Grouped"): [
        "Buying through the links below helps support the channel.",
        "Using the affiliate links below is a great way to support me.",
        "Shopping through the links below supports this channel at no extra cost to you.",
        "The partner links below help support my content.",
    ],
    ("Ambiguous", "MixedGroup"): [
        "Some of the links in the description help support the channel.",
        "Some links in the description are affiliate links that help support the channel.",
        "Links in the description may be affiliate links, thanks for supporting the channel.",
    ],
    ("None", "Explicit"): [
        "This is an affiliate link: {u}",
        "{p} (affiliate link): {u}",
        "Affiliate link for the {p}: {u}",
        "{p} #ad {u}",
        "Sponsored link for the {p}: {u}",
    ],
    ("None", "Grouped"): [
        "Affiliate links:",
        "Gear list (affiliate links):",
        "The links below are affiliate links.",
        "Paid links below.",
        "#affiliate links for everything I used:",
    ],
    ("None", "MixedGroup"): [
        "Some of the links above are affiliate links.",
        "This description may contain affiliate links.",
        "Some links may be affiliate links.",
        "Not all of the links are affiliate links.",
    ],
}

# Disclosures written without the usual vocabulary; annotators still label
# them as disclosures.
HARD_DISCLOSURES = [
    ("Clear", "Grouped", "Any purchase made via the links below sends a few cents my way."),
    ("Clear", "Explicit", "Full disclosure: the store pays me a fee when you order the {p} here: {u}"),
    ("Clear", "Explicit", "Using my code gives me a small percentage of the sale: {u}"),
    ("Ambiguous", "Grouped", "Shopping with these brands keeps the lights on around here."),
    ("Clear", "Grouped", "Heads up, the retailers below pay me a cut of each sale."),
    ("None", "Explicit", "Partnered with the brand for this {p}: {u}"),
    ("Ambiguous", "Explicit", "This one is a little thank-you to the channel if you use it: {u}"),
    ("Clear", "Grouped", "Stuff I use, and yes I get a little something if you buy it:"),
    ("None", "Grouped", "Links courtesy of our friends at the shop below."),
    ("Ambiguous", "MixedGroup", "Clicking around in the description is a nice way to say thanks."),
    ("Clear", "Explicit", "I earn a tiny fee from Amazon if you grab the {p}: {u}"),
    ("None", "Grouped", "This video is brought to you by the brands linked below."),
]

NON_DISCLOSURES = [
    "Thanks for watching, see you in the next one!",
    "Don't forget to like and subscribe for more videos.",
    "Follow me on Instagram: https://instagram.com/makerlane",
    "Music by Lakey Inspired.",
    "0:00 Intro",
    "3:42 Unboxing the {p}",
    "In this video I review the {p} after three months of daily use.",
    "Let me know in the comments what you want to see next.",
    "Join the Discord server: https://discord.gg/abc123",
    "Filmed on location in Lisbon.",
    "My full {p} review is linked here: https://youtu.be/dQw4w9WgXcQ",
    "Previous episode: https://youtu.be/xvFZjo5PgG0",
    "Check out my website for more tutorials: https://makerlane.example",
    "Business inquiries: hello@makerlane.example",
    "Today we are testing the {p} in the rain.",
    "Here is everything I packed for the trip.",
    "The recipe is written out on my blog.",
    "Watch the full playlist here: https://youtube.com/playlist?list=PL1",
    "Huge thanks to everyone who came to the meetup.",
    "The {p} I used is linked below.",
    "Tools used in this build are listed below.",
    "Buy my merch: https://makerlane.example/shop",
    "Tickets for the live show are on sale now.",
    "Edited by Sam, thumbnail by Priya.",
    "Stay safe and keep creating.",
    "Is the {p} worth it in 2024? Let's find out.",
    "I compare the {p} against the cheaper alternative.",
    "The {p} arrived with a cracked case, so this is a warranty story.",
    "Setting up the {p} took about twenty minutes.",
    "Here are my honest thoughts on the {p} after a year.",
    "We tried to fix the {p} with nothing but a screwdriver.",
    "Questions about the {p}? Leave them below.",
    "The {p} from the last video is back on my desk.",
    "Cleaning and maintenance tips for your {p}.",
    "Three mistakes people make when buying a {p}.",
    "Read my written {p} guide: https://makerlane.example/guides",
    "The {p} is available in four colours.",
    "My dad has used the same {p} for twenty years.",
    "Battery life on the {p} surprised me.",
    "Timestamps for the {p} test are in the pinned comment.",
]

# Non-disclosures that share vocabulary with disclosures.
HARD_NON_DISCLOSURES = [
    "This video is not sponsored, I bought the {p} myself.",
    "Nobody paid for this review and I bought everything with my own money.",
    "I was never paid by the brand for this video.",
    "Commissions are open, DM me for art requests.",
    "Sponsor me on Patreon: https://patreon.com/makerlane",
    "Want to become an affiliate? Apply through their affiliate program.",
    "In this video I explain how the Amazon affiliate program works for beginners.",
    "The tournament sponsor this year is a local coffee roaster.",
    "Use discount code SPRING for 10% off at the store.",
    "The promo code from last week has expired.",
    "We talk about affiliate marketing mistakes new bloggers make.",
    "Sponsorship inquiries: sponsors@makerlane.example",
    "My channel sponsors get early access to videos.",
    "No affiliate links here, just stuff I like.",
    "The referral system in the game gives you bonus coins.",
    "Commission prices are on my website.",
]

# Distinct fills drawn from each template that has a placeholder.
FILLS_PER_DISCLOSURE_TEMPLATE = 8
FILLS_PER_NON_DISCLOSURE_TEMPLATE = 8


def fill(template, rng):
    return template.format(p=rng.choice(PRODUCTS), u=rng.choice(URLS))


def fills(template, count, rng):
    """Up to `count` distinct sentences from one template."""
    if "{" not in template:
        return [template]
    out = []
    for _ in range(50 * count):
        text = fill(template, rng)
        if text not in out:
            out.append(text)
        if len(out) == count:
            break
    return out


def build(rng):
    rows = []
    for (comp, rel), templates in DISCLOSURES.items():
        for t in templates:
            for text in fills(t, FILLS_PER_DISCLOSURE_TEMPLATE, rng):
                rows.append(("disclosure", comp, rel, text))
    for comp, rel, t in HARD_DISCLOSURES:
        rows.append(("disclosure", comp, rel, fill(t, rng)))
    for t in HARD_NON_DISCLOSURES:
        rows.append(("non-disclosure", "-", "-", fill(t, rng)))
    for t in NON_DISCLOSURES:
        for text in fills(t, FILLS_PER_NON_DISCLOSURE_TEMPLATE, rng):
            rows.append(("non-disclosure", "-", "-", text))
    texts = [r[3] for r in rows]
    assert len(texts) == len(set(texts)), "duplicate sentence"
    rng.shuffle(rows)
    return rows


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests/data/disclosure_fixture.tsv"
    rows = build(random.Random(SEED))
    with out.open("w", encoding="utf-8", newline="\n") as f:
        f.write("id\tlabel\tcompensation\trelationship\ttext\n")
        for i, (label, comp, rel, text) in enumerate(rows, 1):
            f.write(f"s{i:03d}\t{label}\t{comp}\t{rel}\t{text}\n")
    print(f"wrote {len(rows)} sentences to {out}")


if __name__ == "__main__":
    main()
